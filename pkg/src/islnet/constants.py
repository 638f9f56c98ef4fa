"""Physical constants shared across the package (spherical-Earth model)."""

EARTH_RADIUS_KM = 6378.137
MU_EARTH_KM3_S2 = 398600.4418
C_LIGHT_KM_S = 299792.458
