"""condclt: conditional central-limit machinery and its Monte Carlo verification.

Subpackages:

- ``gauss_cond``: exact multivariate-Gaussian conditioning (Schur complement,
  scalar specialization, change-of-basis commutation).
- ``limit_theory``: closed-form limit covariances for random allocations and
  for vertex degrees in G(n,p) / G(n,m), Weiss's empty-box variance,
  spacings constants, edge-statistic moments.
- ``simulators``: exact finite-n samplers for all models.
- ``monotone``: desk-scale exact stochastic-monotonicity verification.
- ``mc_engine``: replicated Monte Carlo harness with mergeable moment
  accumulators and theory gates.
- ``cwold``: closed-form characteristic-function bench for the one-sided
  uniqueness question.
- ``cli``: batch experiment runner (``condclt`` entry point).
"""

__version__ = "0.1.0"
