//! Adapted basis one-forms and sign-normalized wedge monomials.

use crate::symkernel::{FieldId, MultiIndex};
use std::fmt;

/// One element of the contact-adapted basis on a prolongation of order `k`:
/// `dx^i`, a contact form `omega^sigma_J` with `|J| < k`, or a top-order
/// differential `dy^sigma_J` with `|J| = k`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BasisOne {
    Dx(u8),
    Omega(FieldId, MultiIndex),
    DyTop(FieldId, MultiIndex),
}

impl BasisOne {
    pub fn is_contact(&self) -> bool {
        matches!(self, BasisOne::Omega(..))
    }

    /// Minimal adapted-basis order this element can live on.
    pub fn min_order(&self) -> usize {
        match self {
            BasisOne::Dx(_) => 0,
            BasisOne::Omega(_, index) => index.len() + 1,
            BasisOne::DyTop(_, index) => index.len(),
        }
    }
}

impl fmt::Display for BasisOne {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BasisOne::Dx(i) => write!(f, "dx{i}"),
            BasisOne::Omega(field, index) => {
                if index.is_empty() {
                    write!(f, "w{}", field.0)
                } else {
                    write!(f, "w{}_{{{index}}}", field.0)
                }
            }
            BasisOne::DyTop(field, index) => {
                if index.is_empty() {
                    write!(f, "dy{}", field.0)
                } else {
                    write!(f, "dy{}_{{{index}}}", field.0)
                }
            }
        }
    }
}

/// Strictly increasing, duplicate-free wedge product of basis one-forms.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct WedgeMono(Vec<BasisOne>);

impl WedgeMono {
    pub fn unit() -> Self {
        WedgeMono(Vec::new())
    }

    /// Sorts the factors, returning `None` for a vanishing product
    /// (repeated factor) and otherwise the permutation sign.
    pub fn from_factors(mut factors: Vec<BasisOne>) -> Option<(i8, WedgeMono)> {
        // Insertion sort with inversion counting; fine at these lengths.
        let mut sign = 1i8;
        for i in 1..factors.len() {
            let mut j = i;
            while j > 0 && factors[j] < factors[j - 1] {
                factors.swap(j, j - 1);
                sign = -sign;
                j -= 1;
            }
        }
        if factors.windows(2).any(|w| w[0] == w[1]) {
            return None;
        }
        Some((sign, WedgeMono(factors)))
    }

    pub fn factors(&self) -> &[BasisOne] {
        &self.0
    }

    pub fn degree(&self) -> usize {
        self.0.len()
    }

    pub fn contact_degree(&self) -> usize {
        self.0.iter().filter(|b| b.is_contact()).count()
    }

    pub fn contains(&self, b: &BasisOne) -> bool {
        self.0.binary_search(b).is_ok()
    }

    /// Removes the factor at `pos`, returning the interior-product sign
    /// `(-1)^pos` together with the remaining monomial.
    pub fn remove_at(&self, pos: usize) -> (i8, WedgeMono) {
        let mut v = self.0.clone();
        v.remove(pos);
        let sign = if pos.is_multiple_of(2) { 1 } else { -1 };
        (sign, WedgeMono(v))
    }
}

impl fmt::Display for WedgeMono {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "1");
        }
        for (k, b) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, "^")?;
            }
            write!(f, "{b}")?;
        }
        Ok(())
    }
}
