"""Online convex matrix factorization with representative-sample dictionaries."""

from ._kernels import BACKEND
from .baselines import ResourceGuardError, batch_cvxmf, fit_online_mf, online_mf_step
from .core import (
    Dictionary,
    LassoSettings,
    Model,
    ModelConfig,
    QpSettings,
    RepresentativeSet,
    StepReport,
    SufficientStats,
    objective_from_stats,
    surrogate_direct,
)
from .data import Dataset, MixtureSpec, gen_mixture, random_mixture_spec, read_csv, stream, write_csv
from .initialization import initialize, kmeans
from .metrics import approx_error, basis_recovery, clustering_accuracy, delta_diagnostic
from .online import candidate_sets, choose_candidate, fit, select_update_index, step, update_stats
from .solvers import block_cd_dictionary, project_simplex, solve_column_qp, sparse_code

__version__ = "0.1.0"
