//! Binary waveform-domain complementary code sets.
//!
//! A code set is a D×N matrix of ±1 chips: row `i` is the code of pulse `i`,
//! column `n` is chip position `n`. The set is waveform-domain complementary
//! when, for every nonzero lag `m`, the cross-pulse sums
//!
//! ```text
//! b^(m)(n) = Σ_i a_i(n+m)·a_i(n)
//! ```
//!
//! vanish for every chip `n`. This is the same as the columns of the matrix
//! being mutually orthogonal, so it can only hold when N ≤ D.
//!
//! Sets are produced by cascading a length-2 Golay seed into a stack of
//! Walsh-Hadamard blocks and picking N columns of one block. A Sylvester
//! generator is also provided; both go through [`verify_wdc`].

use std::collections::HashSet;
use std::fmt::Write as _;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};

/// D×N matrix of ±1 chips, stored row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryCodeMatrix {
    d: usize,
    n: usize,
    entries: Vec<i8>,
    verified_wdc: bool,
}

impl BinaryCodeMatrix {
    pub fn new(d: usize, n: usize, entries: Vec<i8>) -> Result<Self> {
        if d == 0 || n == 0 {
            return Err(Error::InvalidConfig(format!("empty code matrix {d}x{n}")));
        }
        if entries.len() != d * n {
            return Err(Error::InvalidConfig(format!(
                "expected {} chips for a {d}x{n} matrix, got {}",
                d * n,
                entries.len()
            )));
        }
        if let Some(pos) = entries.iter().position(|&c| c != 1 && c != -1) {
            return Err(Error::InvalidConfig(format!(
                "chip ({}, {}) is {}, expected +1 or -1",
                pos / n,
                pos % n,
                entries[pos]
            )));
        }
        Ok(Self {
            d,
            n,
            entries,
            verified_wdc: false,
        })
    }

    pub fn from_rows(rows: &[Vec<i8>]) -> Result<Self> {
        let d = rows.len();
        let n = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidConfig("ragged code rows".into()));
        }
        Self::new(d, n, rows.concat())
    }

    /// Number of sequences (pulses per CPI).
    pub fn d(&self) -> usize {
        self.d
    }

    /// Code length (chips per pulse).
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn chip(&self, row: usize, col: usize) -> i8 {
        self.entries[row * self.n + col]
    }

    pub fn row(&self, row: usize) -> &[i8] {
        &self.entries[row * self.n..(row + 1) * self.n]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[i8]> {
        self.entries.chunks_exact(self.n)
    }

    /// True once [`verify_wdc`] has passed on this exact matrix.
    pub fn is_verified(&self) -> bool {
        self.verified_wdc
    }

    /// Runs [`verify_wdc`] and records the outcome on the matrix.
    pub fn verify(&mut self) -> WdcReport {
        let report = verify_wdc(self);
        self.verified_wdc = report.passed();
        report
    }

    pub fn to_text(&self, format: ChipFormat) -> String {
        let mut out = format!("{} {}\n", self.d, self.n);
        for row in self.rows() {
            match format {
                ChipFormat::Symbols => {
                    for &c in row {
                        out.push(if c > 0 { '+' } else { '-' });
                    }
                }
                ChipFormat::Integers => {
                    for (k, &c) in row.iter().enumerate() {
                        if k > 0 {
                            out.push(' ');
                        }
                        let _ = write!(out, "{c}");
                    }
                }
            }
            out.push('\n');
        }
        out
    }

    /// Parses the plain-text form: a `D N` header line followed by D rows,
    /// each either a string of `+`/`-` characters or whitespace-separated
    /// `1`/`-1` integers.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'));
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("missing `D N` header".into()))?;
        let dims: Vec<usize> = header
            .split_whitespace()
            .map(|tok| {
                tok.parse()
                    .map_err(|_| Error::Parse(format!("bad header token `{tok}`")))
            })
            .collect::<Result<_>>()?;
        let [d, n] = dims[..] else {
            return Err(Error::Parse(format!("header must be `D N`, got `{header}`")));
        };
        let mut entries = Vec::with_capacity(d * n);
        let mut row_count = 0;
        for line in lines {
            let before = entries.len();
            if line.contains(char::is_whitespace) || line.contains('1') {
                for tok in line.split_whitespace() {
                    let v: i8 = match tok {
                        "1" | "+1" => 1,
                        "-1" => -1,
                        _ => return Err(Error::Parse(format!("bad chip `{tok}`"))),
                    };
                    entries.push(v);
                }
            } else {
                for ch in line.chars() {
                    entries.push(match ch {
                        '+' => 1,
                        '-' => -1,
                        _ => return Err(Error::Parse(format!("bad chip `{ch}`"))),
                    });
                }
            }
            if entries.len() - before != n {
                return Err(Error::Parse(format!(
                    "row {row_count} has {} chips, expected {n}",
                    entries.len() - before
                )));
            }
            row_count += 1;
        }
        if row_count != d {
            return Err(Error::Parse(format!("expected {d} rows, found {row_count}")));
        }
        Self::new(d, n, entries)
    }
}

/// Chip spelling for the text format.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ChipFormat {
    #[default]
    Symbols,
    Integers,
}

/// Canonical length-2 Golay pair.
pub fn golay_seed() -> (Vec<i8>, Vec<i8>) {
    (vec![1, 1], vec![1, -1])
}

/// Three-dimensional cascade of sequences: a `order × order` array of
/// sequences of length `sequence_len`. Fixing the column index gives one
/// candidate Walsh-Hadamard block (rows are sequences, columns are chips).
///
/// Elements are evaluated from the depth-0 seed array on demand, so deep
/// cascades cost no memory until a block is materialized.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CascadeStructure {
    depth: u32,
    // seed[row][col] is the depth-0 sequence in that cell.
    seed: [[Vec<i8>; 2]; 2],
    cap: usize,
}

impl CascadeStructure {
    pub const DEFAULT_CAP: usize = 4096;

    pub fn depth(&self) -> u32 {
        self.depth
    }

    /// Number of rows, columns, and candidate blocks: 2^(depth+1).
    pub fn order(&self) -> usize {
        2usize << self.depth
    }

    pub fn sequence_len(&self) -> usize {
        self.seed[0][0].len() << self.depth
    }

    pub fn cap(&self) -> usize {
        self.cap
    }

    pub fn with_cap(mut self, cap: usize) -> Self {
        self.cap = cap;
        self
    }

    /// Chip `chip` of the sequence stored at (`row`, `col`).
    pub fn element(&self, row: usize, col: usize, chip: usize) -> i8 {
        let seed_len = self.seed[0][0].len();
        let upper = chip / seed_len;
        let mut value = self.seed[row & 1][col & 1][chip % seed_len];
        for level in 1..=self.depth {
            let row_bit = (row >> level) & 1;
            let col_bit = (col >> level) & 1;
            let second_half = (upper >> (level - 1)) & 1;
            // Off-diagonal blocks carry a negated first half.
            if row_bit != col_bit && second_half == 0 {
                value = -value;
            }
        }
        value
    }

    /// Materializes candidate block `index` as rows of chips.
    pub fn block(&self, index: usize) -> Result<Vec<Vec<i8>>> {
        let order = self.order();
        if index >= order {
            return Err(Error::IndexOutOfRange {
                index,
                bound: order,
            });
        }
        let len = self.sequence_len();
        Ok((0..order)
            .map(|row| (0..len).map(|c| self.element(row, index, c)).collect())
            .collect())
    }
}

/// Builds the depth-0 array `[[s0, rev(s1)], [s1, -rev(s0)]]`.
pub fn build_delta(s0: &[i8], s1: &[i8]) -> Result<CascadeStructure> {
    if s0.is_empty() || s0.len() != s1.len() {
        return Err(Error::InvalidConfig(format!(
            "seed lengths {} and {} must be equal and nonzero",
            s0.len(),
            s1.len()
        )));
    }
    if s0.iter().chain(s1).any(|&c| c != 1 && c != -1) {
        return Err(Error::InvalidConfig("seed chips must be +1 or -1".into()));
    }
    let inner_product: i64 = s0.iter().zip(s1).map(|(&a, &b)| (a * b) as i64).sum();
    if inner_product != 0 {
        return Err(Error::NonOrthogonalSeed { inner_product });
    }
    let rev = |s: &[i8]| s.iter().rev().copied().collect::<Vec<_>>();
    let neg_rev = |s: &[i8]| s.iter().rev().map(|&c| -c).collect::<Vec<_>>();
    Ok(CascadeStructure {
        depth: 0,
        seed: [[s0.to_vec(), rev(s1)], [s1.to_vec(), neg_rev(s0)]],
        cap: CascadeStructure::DEFAULT_CAP,
    })
}

/// Applies the cascade step `Δ' = [[ΔΔ, (-Δ)Δ], [(-Δ)Δ, ΔΔ]]` `iterations` times.
pub fn cascade(structure: &CascadeStructure, iterations: u32) -> Result<CascadeStructure> {
    let depth = structure.depth + iterations;
    let size = 1usize
        .checked_shl(depth + 1)
        .filter(|&s| s <= structure.cap && depth < usize::BITS - 1)
        .ok_or(Error::SizeOverflow {
            size: 1usize.checked_shl(depth + 1).unwrap_or(usize::MAX),
            cap: structure.cap,
        })?;
    debug_assert_eq!(size, 2 << depth);
    Ok(CascadeStructure {
        depth,
        ..structure.clone()
    })
}

/// Extracts a D×N code set from one cascade block.
pub fn select_codeset(
    structure: &CascadeStructure,
    block_index: usize,
    column_indices: &[usize],
) -> Result<BinaryCodeMatrix> {
    let order = structure.order();
    if block_index >= order {
        return Err(Error::IndexOutOfRange {
            index: block_index,
            bound: order,
        });
    }
    let len = structure.sequence_len();
    let mut seen = HashSet::with_capacity(column_indices.len());
    for &c in column_indices {
        if c >= len {
            return Err(Error::IndexOutOfRange { index: c, bound: len });
        }
        if !seen.insert(c) {
            return Err(Error::DuplicateColumn(c));
        }
    }
    let n = column_indices.len();
    if n > order {
        return Err(Error::CodeLengthExceedsSetSize { n, d: order });
    }
    let mut entries = Vec::with_capacity(order * n);
    for row in 0..order {
        entries.extend(
            column_indices
                .iter()
                .map(|&c| structure.element(row, block_index, c)),
        );
    }
    let mut matrix = BinaryCodeMatrix::new(order, n, entries)?;
    matrix.verify();
    Ok(matrix)
}

/// Picks `n` distinct columns of `block_index` uniformly at random; the chosen
/// columns keep their natural order.
pub fn select_random_codeset(
    structure: &CascadeStructure,
    block_index: usize,
    n: usize,
    seed: u64,
) -> Result<BinaryCodeMatrix> {
    let len = structure.sequence_len();
    if n > structure.order() {
        return Err(Error::CodeLengthExceedsSetSize {
            n,
            d: structure.order(),
        });
    }
    if n > len {
        return Err(Error::IndexOutOfRange { index: n, bound: len });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cols = index::sample(&mut rng, len, n).into_vec();
    cols.sort_unstable();
    select_codeset(structure, block_index, &cols)
}

/// Which generator produces the Walsh-Hadamard block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CodeGenerator {
    #[default]
    Cascade,
    Sylvester,
}

/// How the N columns are picked from the block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ColumnSelection {
    /// Columns `0..N` of the block.
    #[default]
    Leading,
    /// Seeded uniform choice of N distinct columns.
    Random { seed: u64 },
}

/// `log2(d) - 1` cascade iterations for a power-of-two `d ≥ 2`.
pub fn cascade_depth_for(d: usize) -> Result<u32> {
    if d < 2 || !d.is_power_of_two() {
        return Err(Error::InvalidConfig(format!(
            "D={d} must be a power of two no smaller than 2"
        )));
    }
    Ok(d.trailing_zeros() - 1)
}

/// Generates a verified D×N set with the chosen generator and selection.
pub fn generate_codeset(
    d: usize,
    n: usize,
    generator: CodeGenerator,
    block_index: usize,
    selection: ColumnSelection,
) -> Result<BinaryCodeMatrix> {
    if n > d {
        return Err(Error::CodeLengthExceedsSetSize { n, d });
    }
    if n == 0 {
        return Err(Error::InvalidConfig("code length must be positive".into()));
    }
    match generator {
        CodeGenerator::Cascade => {
            let depth = cascade_depth_for(d)?;
            let (s0, s1) = golay_seed();
            let structure = cascade(&build_delta(&s0, &s1)?, depth)?;
            match selection {
                ColumnSelection::Leading => {
                    select_codeset(&structure, block_index, &(0..n).collect::<Vec<_>>())
                }
                ColumnSelection::Random { seed } => {
                    select_random_codeset(&structure, block_index, n, seed)
                }
            }
        }
        CodeGenerator::Sylvester => {
            if block_index != 0 {
                return Err(Error::IndexOutOfRange {
                    index: block_index,
                    bound: 1,
                });
            }
            let h = sylvester_hadamard(d)?;
            let cols: Vec<usize> = match selection {
                ColumnSelection::Leading => (0..n).collect(),
                ColumnSelection::Random { seed } => {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    let mut c = index::sample(&mut rng, d, n).into_vec();
                    c.sort_unstable();
                    c
                }
            };
            let entries = h
                .iter()
                .flat_map(|row| cols.iter().map(move |&c| row[c]))
                .collect();
            let mut m = BinaryCodeMatrix::new(d, n, entries)?;
            m.verify();
            Ok(m)
        }
    }
}

/// Sylvester-ordered Hadamard matrix: `H[i][j] = (-1)^popcount(i & j)`.
pub fn sylvester_hadamard(order: usize) -> Result<Vec<Vec<i8>>> {
    if order == 0 || !order.is_power_of_two() {
        return Err(Error::InvalidConfig(format!(
            "Sylvester order {order} must be a power of two"
        )));
    }
    if order > CascadeStructure::DEFAULT_CAP {
        return Err(Error::SizeOverflow {
            size: order,
            cap: CascadeStructure::DEFAULT_CAP,
        });
    }
    Ok((0..order)
        .map(|i| {
            (0..order)
                .map(|j| if (i & j).count_ones() % 2 == 0 { 1 } else { -1 })
                .collect()
        })
        .collect())
}

/// Cross-pulse response `b^(m)(n)` at one lag, over every `n` for which both
/// `n` and `n+m` are valid chip indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResponseSequence {
    pub lag: i64,
    /// Chip index of `values[0]`.
    pub first_chip: usize,
    pub values: Vec<i64>,
}

pub fn response_sequence(a: &BinaryCodeMatrix, lag: i64) -> Result<ResponseSequence> {
    let n = a.n() as i64;
    if lag.abs() >= n {
        return Err(Error::LagOutOfRange { lag, n: a.n() });
    }
    let first = (-lag).max(0);
    let last = (n - lag).min(n); // exclusive
    let values = (first..last)
        .map(|c| {
            let (c0, c1) = (c as usize, (c + lag) as usize);
            a.rows().map(|row| (row[c1] * row[c0]) as i64).sum()
        })
        .collect();
    Ok(ResponseSequence {
        lag,
        first_chip: first as usize,
        values,
    })
}

/// Outcome of [`verify_wdc`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct WdcReport {
    pub d: usize,
    pub n: usize,
    /// `b^(m)(n) = 0` for every nonzero lag.
    pub complementary: bool,
    /// First `(m, n, b)` with `m > 0` and `b ≠ 0`.
    pub first_failure: Option<(i64, usize, i64)>,
    /// `b^(0)(n) = D` for every `n`.
    pub zero_lag_ok: bool,
    /// Summed aperiodic autocorrelations vanish at every nonzero lag.
    pub autocorrelation_complementary: bool,
    pub autocorrelation_failure: Option<(i64, i64)>,
    /// D is even.
    pub even_set_count: bool,
    /// N odd and above 1 implies D divisible by 4.
    pub odd_length_consistent: bool,
    /// N ≤ D.
    pub length_bound_ok: bool,
}

impl WdcReport {
    pub fn passed(&self) -> bool {
        self.complementary
            && self.zero_lag_ok
            && self.autocorrelation_complementary
            && self.even_set_count
            && self.odd_length_consistent
            && self.length_bound_ok
    }
}

/// Checks waveform-domain complementarity with exact integer arithmetic and
/// reports the structural consistency conditions alongside it.
pub fn verify_wdc(a: &BinaryCodeMatrix) -> WdcReport {
    let (d, n) = (a.d(), a.n());
    let mut first_failure = None;
    let mut zero_lag_ok = true;
    for lag in 0..n as i64 {
        let seq = response_sequence(a, lag).expect("lag within range");
        for (k, &b) in seq.values.iter().enumerate() {
            if lag == 0 {
                zero_lag_ok &= b == d as i64;
            } else if b != 0 && first_failure.is_none() {
                first_failure = Some((lag, seq.first_chip + k, b));
            }
        }
    }

    // Row-wise aperiodic autocorrelations, summed over the set.
    let mut autocorrelation_failure = None;
    for lag in 1..n {
        let total: i64 = a
            .rows()
            .map(|row| {
                row[lag..]
                    .iter()
                    .zip(row)
                    .map(|(&x, &y)| (x * y) as i64)
                    .sum::<i64>()
            })
            .sum();
        if total != 0 {
            autocorrelation_failure = Some((lag as i64, total));
            break;
        }
    }

    WdcReport {
        d,
        n,
        complementary: first_failure.is_none(),
        first_failure,
        zero_lag_ok,
        autocorrelation_complementary: autocorrelation_failure.is_none(),
        autocorrelation_failure,
        even_set_count: d % 2 == 0,
        odd_length_consistent: n % 2 == 0 || n == 1 || d % 4 == 0,
        length_bound_ok: n <= d,
    }
}
