//! Well-posedness of Gaussian data assimilation on a separable Hilbert space
//! when the prior and noise covariances share an eigenbasis.

pub mod assimilate;
pub mod elements;
pub mod error;
pub mod montecarlo;
pub mod spectra;
pub mod wellposed;

pub use assimilate::{
    kalman_gain_mode, posterior, three_dvar_cost, three_dvar_feasible, three_dvar_minimize, AssimilationProblem,
    Feasibility, PosteriorResult, PosteriorSpec, ThreeDvarArgmin, ThreeDvarMinimum,
};
pub use elements::series::{classify_series, TermModel};
pub use elements::{
    norm_sq, weighted_norm_sq, CoeffSeq, ExtReal, PowerTail, SeriesConfig, SeriesVerdict, SubsequenceTail, Tail,
};
pub use error::{Error, Result};
pub use montecarlo::{ess_sweep, mc_log_constant, sample_prior, EssCurve, EssPoint, LogMeanEstimate, SampleBatch};
pub use spectra::{eigenvalue, lower_bound, ratio_limit, trace, Family, RatioLimit, SpectrumModel, MAX_INDEX};
pub use wellposed::{
    classify_problem, construct_bad_data, log_norm_constant, truncated_log_constant, LogConstant,
    NormalizationSeries, WellPosednessReport,
};
