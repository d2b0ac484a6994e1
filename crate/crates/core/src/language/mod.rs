//! The language organ: a toy lexicon, the areas and fibers that learn it,
//! and the criteria that decide when it has been learned.

pub mod criteria;
pub mod lexicon;
pub mod organ;

pub use criteria::{
    check_p, check_q1, check_q2, check_q3, check_success, CriterionReport, SuccessReport,
    Thresholds,
};
pub use lexicon::{sample_sentence, Lexicon, Pos, Sentence, Word, WordOrder};
pub use organ::{Organ, OrganAreas, OrganConfig};
