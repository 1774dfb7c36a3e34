"""Frozen reference values; regenerate with make_reference.py."""

# (T1, R1, T2, R2) from ODE integration across the interface, keyed by (k, tau)
SCATTERING = {
    (1.0, 3.141592653589793): (
        -0.707106781186548 + 5.5610670297189864e-15j,
        -0.29289321881345254 - 1.2529861273300478e-14j,
        0.7071067811865475 + 2.728962798383209e-14j,
        -1.7071067811865468 + 1.8170127630952912e-13j,
    ),
    (0.7, 2.0): (
        -0.385598743048897 - 0.5101995392451038j,
        -0.37561117470042243 - 0.13830602057692343j,
        0.6243888252995762 - 0.1383060205769087j,
        -1.385598743048915 - 0.5101995392450474j,
    ),
    (-1.3, 4.5): (
        0.8528725438254261 - 0.09414996863657427j,
        -1.2718163796078104 - 0.8138621802137365j,
        -0.2718163796077003 - 0.8138621802138744j,
        -0.14712745617457001 - 0.09414996863659204j,
    ),
}

# tau = 0 jump kernel at k = 1.2, x = 0.3, y = -0.7 from the plane-wave symbol
FREE_JUMP = (
    (0.9320390859672262 + 0.47168408907728376j, 0.301964795397228j),
    (0.301964795397228j, -0.9320390859672262 + 0.47168408907728376j),
)

# integral of rho_2(k) exp(-i 50 <k>) dk, k0 = 1, 10^6-node midpoint rule
BAND_INTEGRAL_T50_J2 = -5.1274624094160404e-08 + 3.155640161904429e-07j

# squared L2 norm of the gap state with amplitude 1/2 at tau = pi (quad)
HALF_AMPLITUDE_NORM2 = 0.49999999999999994

# brute-force Stone quadrature, tau = 2, t = 3, eps = 1, k_max = 16
STONE_X = (-2.5, 4.0)
STONE_POS = (
    (-0.14618139621822326 - 0.0382244712965022j, -0.10990700883943688 - 0.002364567236520073j),
    (-0.0806332616734649 + 0.024256217154975626j, 0.0791945464953975 - 0.09470127496114726j),
)
STONE_NEG = (
    (-0.06640397931284525 + 0.03552476529248089j, 0.048191666812908096 - 0.020350543910283066j),
    (-0.00722402122157227 - 0.0521857155477732j, -0.06864376471013334 + 0.013885753771225987j),
)
