use serde::{Deserialize, Serialize};

use crate::runtime::Word;

/// A commutative, associative fold over words with an identity, so partial
/// results can be combined in any tree shape.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SeparableFn {
    Sum,
    Min,
    Max,
    Or,
}

impl SeparableFn {
    /// Result over the empty set; isolated vertices aggregate to this.
    pub fn identity(self) -> Word {
        match self {
            SeparableFn::Sum | SeparableFn::Max | SeparableFn::Or => 0,
            SeparableFn::Min => Word::MAX,
        }
    }

    #[inline]
    pub fn combine(self, a: Word, b: Word) -> Word {
        match self {
            SeparableFn::Sum => a.wrapping_add(b),
            SeparableFn::Min => a.min(b),
            SeparableFn::Max => a.max(b),
            SeparableFn::Or => a | b,
        }
    }

    pub fn fold<I: IntoIterator<Item = Word>>(self, items: I) -> Word {
        items
            .into_iter()
            .fold(self.identity(), |acc, x| self.combine(acc, x))
    }
}
