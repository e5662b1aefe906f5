//! Mode schedules, switch tuples and the single-switch candidate space.
//!
//! A [`Schedule`] assigns one mode to every discrete step of the horizon.
//! A [`SwitchTuple`] `(mode, start, duration)` overwrites the half-open
//! window `[start, start + duration)` of a schedule with a single mode.
//! The [`CandidateSpace`] indexes every tuple with `duration >= 1` and hands
//! them out uniformly at random without replacement.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::ScheduleError;

/// Zero-based index of a hybrid mode.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct ModeId(pub usize);

impl ModeId {
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for ModeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl From<usize> for ModeId {
    fn from(value: usize) -> Self {
        ModeId(value)
    }
}

/// One mode per discrete step `k in [0, T)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Schedule {
    modes: Vec<ModeId>,
}

impl Schedule {
    pub fn new(modes: Vec<ModeId>) -> Self {
        Self { modes }
    }

    /// A schedule that holds `mode` for the whole horizon.
    pub fn constant(mode: ModeId, horizon: usize) -> Self {
        Self {
            modes: vec![mode; horizon],
        }
    }

    pub fn from_indices(indices: &[usize]) -> Self {
        Self {
            modes: indices.iter().copied().map(ModeId).collect(),
        }
    }

    pub fn horizon(&self) -> usize {
        self.modes.len()
    }

    pub fn modes(&self) -> &[ModeId] {
        &self.modes
    }

    pub fn mode_at(&self, k: usize) -> ModeId {
        self.modes[k]
    }

    pub fn indices(&self) -> Vec<usize> {
        self.modes.iter().map(|m| m.0).collect()
    }

    /// Checks that every entry is a valid mode for a problem with `mode_count` modes
    /// and that the length matches `horizon`.
    pub fn validate(&self, mode_count: usize, horizon: usize) -> Result<(), ScheduleError> {
        if self.modes.len() != horizon {
            return Err(ScheduleError::InvalidArgument(format!(
                "schedule length {} does not match horizon {horizon}",
                self.modes.len()
            )));
        }
        if let Some((k, m)) = self.modes.iter().enumerate().find(|(_, m)| m.0 >= mode_count) {
            return Err(ScheduleError::InvalidArgument(format!(
                "mode {m} at step {k} is not below mode count {mode_count}"
            )));
        }
        Ok(())
    }

    /// Overwrites `[start, start + duration)` with the switch mode; `self` is left untouched.
    pub fn stitch(&self, switch: &SwitchTuple) -> Result<Schedule, ScheduleError> {
        let horizon = self.horizon();
        if switch.start > horizon || switch.end() > horizon {
            return Err(ScheduleError::InvalidArgument(format!(
                "switch {switch} does not fit horizon {horizon}"
            )));
        }
        let mut modes = self.modes.clone();
        modes[switch.start..switch.end()].fill(switch.mode);
        Ok(Schedule { modes })
    }

    /// Drops the first step and appends `fill` (receding-horizon warm start).
    pub fn shifted(&self, fill: ModeId) -> Schedule {
        let mut modes: Vec<ModeId> = self.modes.iter().skip(1).copied().collect();
        if !self.modes.is_empty() {
            modes.push(fill);
        }
        Schedule { modes }
    }

    /// Maximal-run segmentation.
    pub fn to_run_length(&self) -> Result<RunLengthSchedule, ScheduleError> {
        let Some(&first) = self.modes.first() else {
            return Err(ScheduleError::InvalidArgument(
                "cannot segment an empty schedule".into(),
            ));
        };
        let mut segments = vec![Segment {
            mode: first,
            start: 0,
            length: 1,
        }];
        for (k, &m) in self.modes.iter().enumerate().skip(1) {
            let last = segments.last_mut().expect("at least one segment");
            if last.mode == m {
                last.length += 1;
            } else {
                segments.push(Segment {
                    mode: m,
                    start: k,
                    length: 1,
                });
            }
        }
        Ok(RunLengthSchedule { segments })
    }

    pub fn from_run_length(rle: &RunLengthSchedule) -> Schedule {
        let mut modes = Vec::with_capacity(rle.horizon());
        for seg in &rle.segments {
            modes.extend(std::iter::repeat_n(seg.mode, seg.length));
        }
        Schedule { modes }
    }
}

/// `0,1,1,0`
impl fmt::Display for Schedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, m) in self.modes.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{m}")?;
        }
        Ok(())
    }
}

impl FromStr for Schedule {
    type Err = ScheduleError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s.is_empty() {
            return Ok(Schedule { modes: Vec::new() });
        }
        s.split(',')
            .map(|tok| {
                tok.trim()
                    .parse::<usize>()
                    .map(ModeId)
                    .map_err(|_| ScheduleError::Parse(format!("bad mode id `{tok}`")))
            })
            .collect::<Result<Vec<_>, _>>()
            .map(Schedule::new)
    }
}

/// A single mode insertion: `mode` applied on `[start, start + duration)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SwitchTuple {
    pub mode: ModeId,
    pub start: usize,
    pub duration: usize,
}

impl SwitchTuple {
    pub fn new(mode: ModeId, start: usize, duration: usize) -> Self {
        Self {
            mode,
            start,
            duration,
        }
    }

    pub fn end(&self) -> usize {
        self.start + self.duration
    }

    /// `duration == 0` leaves any schedule unchanged.
    pub fn is_identity(&self) -> bool {
        self.duration == 0
    }

    pub fn covers(&self, k: usize) -> bool {
        k >= self.start && k < self.end()
    }
}

impl fmt::Display for SwitchTuple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.mode, self.start, self.duration)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Segment {
    pub mode: ModeId,
    pub start: usize,
    pub length: usize,
}

/// Maximal runs of a schedule: contiguous, starting at 0, adjacent modes distinct.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RunLengthSchedule {
    segments: Vec<Segment>,
}

impl RunLengthSchedule {
    /// Builds a run-length schedule after checking contiguity and maximality.
    pub fn new(segments: Vec<Segment>) -> Result<Self, ScheduleError> {
        let mut expected_start = 0;
        for (i, seg) in segments.iter().enumerate() {
            if seg.start != expected_start {
                return Err(ScheduleError::InvalidArgument(format!(
                    "segment {i} starts at {} but previous run ends at {expected_start}",
                    seg.start
                )));
            }
            if seg.length == 0 {
                return Err(ScheduleError::InvalidArgument(format!(
                    "segment {i} has zero length"
                )));
            }
            if i > 0 && segments[i - 1].mode == seg.mode {
                return Err(ScheduleError::InvalidArgument(format!(
                    "segments {} and {i} share mode {}",
                    i - 1,
                    seg.mode
                )));
            }
            expected_start += seg.length;
        }
        Ok(Self { segments })
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn horizon(&self) -> usize {
        self.segments.iter().map(|s| s.length).sum()
    }
}

/// One `mode:start:length` line per segment, each terminated by `\n`.
impl fmt::Display for RunLengthSchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for seg in &self.segments {
            writeln!(f, "{}:{}:{}", seg.mode, seg.start, seg.length)?;
        }
        Ok(())
    }
}

impl FromStr for RunLengthSchedule {
    type Err = ScheduleError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut segments = Vec::new();
        for line in s.lines().map(str::trim).filter(|l| !l.is_empty()) {
            let fields: Vec<&str> = line.split(':').collect();
            let parsed: Result<Vec<usize>, _> = fields.iter().map(|f| f.parse::<usize>()).collect();
            match parsed.as_deref() {
                Ok(&[mode, start, length]) => segments.push(Segment {
                    mode: ModeId(mode),
                    start,
                    length,
                }),
                _ => return Err(ScheduleError::Parse(format!("bad segment line `{line}`"))),
            }
        }
        RunLengthSchedule::new(segments)
    }
}

/// Number of tuples `(m, mu, nu)` with `mu in [0, T)` and `nu in [1, T - mu]`.
pub fn candidate_count(mode_count: usize, horizon: usize) -> u64 {
    let t = horizon as u64;
    mode_count as u64 * t * (t + 1) / 2
}

/// Lazily indexed set of all single-switch candidates with a
/// without-replacement draw cursor.
///
/// Index order is lexicographic in `(mode, start, duration)`, so comparing
/// indices is the same as comparing tuples.
#[derive(Clone, Debug)]
pub struct CandidateSpace {
    mode_count: usize,
    horizon: usize,
    total: u64,
    cursor: u64,
    // Sparse Fisher-Yates: position -> value for every displaced slot.
    swaps: HashMap<u64, u64>,
    rng: ChaCha8Rng,
}

impl CandidateSpace {
    pub fn new(mode_count: usize, horizon: usize, seed: u64) -> Result<Self, ScheduleError> {
        if mode_count == 0 || horizon == 0 {
            return Err(ScheduleError::InvalidArgument(format!(
                "candidate space needs mode_count >= 1 and horizon >= 1 (got {mode_count}, {horizon})"
            )));
        }
        Ok(Self {
            mode_count,
            horizon,
            total: candidate_count(mode_count, horizon),
            cursor: 0,
            swaps: HashMap::new(),
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    pub fn mode_count(&self) -> usize {
        self.mode_count
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn remaining(&self) -> u64 {
        self.total - self.cursor
    }

    pub fn drawn(&self) -> u64 {
        self.cursor
    }

    fn per_mode(&self) -> u64 {
        let t = self.horizon as u64;
        t * (t + 1) / 2
    }

    // Index of the first tuple with the given start inside one mode block.
    fn start_offset(&self, start: u64) -> u64 {
        let t = self.horizon as u64;
        start * t - start * start.saturating_sub(1) / 2
    }

    pub fn index_to_tuple(&self, index: u64) -> Result<SwitchTuple, ScheduleError> {
        if index >= self.total {
            return Err(ScheduleError::OutOfRange {
                index,
                total: self.total,
            });
        }
        let per_mode = self.per_mode();
        let mode = index / per_mode;
        let rest = index % per_mode;
        // Largest start whose offset does not exceed `rest`.
        let (mut lo, mut hi) = (0u64, self.horizon as u64 - 1);
        while lo < hi {
            let mid = (lo + hi).div_ceil(2);
            if self.start_offset(mid) <= rest {
                lo = mid;
            } else {
                hi = mid - 1;
            }
        }
        let duration = rest - self.start_offset(lo) + 1;
        Ok(SwitchTuple {
            mode: ModeId(mode as usize),
            start: lo as usize,
            duration: duration as usize,
        })
    }

    pub fn tuple_to_index(&self, tuple: &SwitchTuple) -> Result<u64, ScheduleError> {
        if tuple.mode.0 >= self.mode_count
            || tuple.start >= self.horizon
            || tuple.duration == 0
            || tuple.end() > self.horizon
        {
            return Err(ScheduleError::InvalidArgument(format!(
                "{tuple} is not a candidate for M={}, T={}",
                self.mode_count, self.horizon
            )));
        }
        Ok(tuple.mode.0 as u64 * self.per_mode()
            + self.start_offset(tuple.start as u64)
            + tuple.duration as u64
            - 1)
    }

    /// Every candidate in index order.
    pub fn iter_all(&self) -> impl Iterator<Item = SwitchTuple> + '_ {
        (0..self.total).map(move |i| self.index_to_tuple(i).expect("index below total"))
    }

    /// Next index of the lazily advanced uniform permutation.
    fn next_index(&mut self) -> Option<u64> {
        if self.cursor >= self.total {
            return None;
        }
        let c = self.cursor;
        let j = self.rng.random_range(c..self.total);
        let at_j = self.swaps.get(&j).copied().unwrap_or(j);
        let at_c = self.swaps.remove(&c).unwrap_or(c);
        if j != c {
            self.swaps.insert(j, at_c);
        }
        self.cursor += 1;
        Some(at_j)
    }

    /// Draws `min(n, remaining)` indices uniformly from the not-yet-drawn subset.
    pub fn draw_indices(&mut self, n: usize) -> Result<Vec<u64>, ScheduleError> {
        if n == 0 {
            return Err(ScheduleError::InvalidArgument("batch size must be >= 1".into()));
        }
        if self.remaining() == 0 {
            return Err(ScheduleError::Exhausted);
        }
        let take = (n as u64).min(self.remaining()) as usize;
        Ok((0..take).map_while(|_| self.next_index()).collect())
    }

    pub fn draw_batch(&mut self, n: usize) -> Result<Vec<SwitchTuple>, ScheduleError> {
        let indices = self.draw_indices(n)?;
        indices.into_iter().map(|i| self.index_to_tuple(i)).collect()
    }

    /// Makes every candidate drawable again. The random stream continues, so the
    /// next permutation differs from the previous one.
    pub fn reset(&mut self) {
        self.cursor = 0;
        self.swaps.clear();
    }
}
