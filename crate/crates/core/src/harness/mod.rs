//! Evaluation of the capacity, area, volume and curvature inequalities on a
//! body corpus, with slack and tolerance recorded per report.
//!
//! Capacity-dependent checks are evaluated at whichever end of the capacity
//! bracket makes the slack smaller, and the change of slack across the
//! bracket, `w`, enters the tolerance `max(2 w, 1e-2 |right|)`.

mod corpus;
mod evaluate;
mod report;
mod riesz;

pub use corpus::{
    capacity_bracket, corpus, evaluate_body, sweep, BodyEvaluation, HarnessConfig,
    CORPUS_EXPONENTS,
};
pub use evaluate::{
    eval_cap2_constants, eval_e14, eval_e210_af_e20aa, eval_e26, eval_e29,
    eval_e29e_and_sandwich, eval_eav, eval_limits_k, eval_riesz_e23_e24, eval_willmore,
    polya_szego_constants, sandwich_lower_constant, scan_conjecture_e25, Ingredients,
    PolyaSzegoConstants, LIMIT_REACH, LIMIT_WINDOW, RELATIVE_FLOOR, WILLMORE_FLOOR,
};
pub use report::{
    BracketEnd, CapacityBracket, CapacitySource, InequalityId, InequalityReport, Provenance,
    Relation,
};
pub use riesz::{
    riesz_survey, sample_directions, single_layer_potential, RieszConfig, RieszSurvey,
};
