use super::Letter;
use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Finite sequence of letters with its cached product `A_k⋯A_1` and total
/// weight.
#[derive(Debug, Clone, PartialEq)]
pub struct Word {
    letters: Vec<Letter>,
    product: Matrix,
    weight: f64,
}

impl Word {
    pub fn empty(dim: usize) -> Self {
        Self {
            letters: Vec::new(),
            product: Matrix::identity(dim, dim),
            weight: 0.0,
        }
    }

    pub fn from_letters(dim: usize, letters: impl IntoIterator<Item = Letter>) -> Result<Self> {
        letters.into_iter().try_fold(Self::empty(dim), |w, l| w.extend(l))
    }

    /// Appends `letter` on the left of the product.
    pub fn extend(mut self, letter: Letter) -> Result<Self> {
        if letter.matrix.nrows() != self.product.nrows() || !letter.matrix.is_square() {
            return Err(Error::Domain(format!(
                "letter of size {}x{} does not match word dimension {}",
                letter.matrix.nrows(),
                letter.matrix.ncols(),
                self.product.nrows()
            )));
        }
        self.product = &letter.matrix * &self.product;
        self.weight += letter.weight;
        self.letters.push(letter);
        Ok(self)
    }

    pub fn letters(&self) -> &[Letter] {
        &self.letters
    }

    pub fn product(&self) -> &Matrix {
        &self.product
    }

    pub fn weight(&self) -> f64 {
        self.weight
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.product.nrows()
    }

    /// `A_{k2}⋯A_{k1+1}`, the product of letters `k1..k2` (0-based, half open).
    pub fn partial_product(&self, k1: usize, k2: usize) -> Result<Matrix> {
        if k1 > k2 || k2 > self.letters.len() {
            return Err(Error::Domain(format!(
                "partial product {k1}..{k2} out of range for word of length {}",
                self.letters.len()
            )));
        }
        let d = self.dim();
        Ok(self.letters[k1..k2]
            .iter()
            .fold(Matrix::identity(d, d), |acc, l| &l.matrix * acc))
    }
}
