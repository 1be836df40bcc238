use super::SimError;

/// A set S of computational basis states on `n` qubits.
#[derive(Clone, Debug, PartialEq)]
pub struct SubspaceSpec {
    n: usize,
    member: Vec<bool>,
    count: usize,
}

impl SubspaceSpec {
    pub fn from_predicate(n: usize, pred: impl Fn(usize) -> bool) -> Result<Self, SimError> {
        let member: Vec<bool> = (0..1usize << n).map(pred).collect();
        Self::from_mask(n, member)
    }

    pub fn from_indices(n: usize, indices: &[usize]) -> Result<Self, SimError> {
        let mut member = vec![false; 1 << n];
        for &i in indices {
            *member.get_mut(i).ok_or(SimError::BadIndex { index: i, n })? = true;
        }
        Self::from_mask(n, member)
    }

    fn from_mask(n: usize, member: Vec<bool>) -> Result<Self, SimError> {
        let count = member.iter().filter(|&&b| b).count();
        if count == 0 {
            return Err(SimError::EmptySubspace);
        }
        Ok(Self { n, member, count })
    }

    /// Weight-1 states on each of `registers` consecutive blocks of `width`
    /// wires; wires beyond the registers must be |0⟩.
    pub fn one_hot_registers(n: usize, registers: usize, width: usize) -> Result<Self, SimError> {
        let mask = (1usize << width) - 1;
        let used = registers * width;
        Self::from_predicate(n, |z| {
            z >> used == 0 && (0..registers).all(|r| ((z >> (r * width)) & mask).count_ones() == 1)
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }

    pub fn contains(&self, index: usize) -> bool {
        self.member.get(index).copied().unwrap_or(false)
    }

    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.member.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i)
    }
}
