from .quadrature import QuadResult, composite_gl, gauss_legendre, gl_nodes, integrate
from .special import (
    bell_complete,
    gamma_cdf,
    gamma_ccdf,
    gamma_pdf,
    gamma_ratio,
    gauss_2f1,
    log_bell_scaled,
    log_rising,
    nakagami_mean,
)
from .inversion import euler, inverse_laplace_cdf, talbot
