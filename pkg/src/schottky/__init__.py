"""Numerics for Schottky uniformization of compact Riemann surfaces.

The package computes truncated orbit sums for the standard function
theory on a Schottky-uniformized surface (holomorphic differentials,
the symmetric bidifferential, higher-weight kernels, the period matrix),
builds the truncated mode-coupling operators whose Fredholm determinant
gives free-boson partition functions, evaluates closed-form chiral
correlators (Heisenberg, Virasoro, lattice), and verifies variational
identities in the moduli parameters by finite differences.

Entry points:

- :mod:`schottky.group`: parameter spaces, Mobius maps, word enumeration.
- :mod:`schottky.forms`: truncated series for kernels, differentials and
  the period matrix.
- :mod:`schottky.modes`: mode-coupling matrices, resolvent route to the
  weight-N kernel, determinant partition function.
- :mod:`schottky.correlators`: Heisenberg / Virasoro / lattice
  correlation functions and Siegel theta sums.
- :mod:`schottky.variations`: moduli derivatives, the differential
  connection, and identity residual checks.
- :mod:`schottky.paramfiles`: parameter-file parsing and deterministic
  JSON/CSV serialization.
- :mod:`schottky.cli`: the ``schottky`` command-line tool.
"""

from schottky.group import (
    INFINITY,
    ClassicalParams,
    DegenerateMapError,
    DomainExitError,
    GroupWord,
    IDENTITY_MAP,
    InvalidParameterError,
    MobiusMap,
    SchottkyError,
    SchottkyParams,
    TruncationPolicy,
    ValidityReport,
    apply_mobius,
    classical_from_params,
    default_mode_cutoff,
    enumerate_group,
    generator_map,
    in_fundamental_domain,
    is_infinity,
    mobius_act_on_params,
    params_from_classical,
    signed_indices,
    validate,
    word_count,
)

__version__ = "0.1.0"
