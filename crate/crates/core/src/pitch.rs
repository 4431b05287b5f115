//! Pitch classes and sets of pitch classes.

use std::fmt;

use serde::{Deserialize, Serialize};

/// One of the twelve octave-free pitch classes, C = 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct PitchClass(u8);

const SHARP_NAMES: [&str; 12] = ["C", "C#", "D", "D#", "E", "F", "F#", "G", "G#", "A", "A#", "B"];

impl PitchClass {
    pub const C: PitchClass = PitchClass(0);

    pub fn new(value: u8) -> Option<Self> {
        (value < 12).then_some(PitchClass(value))
    }

    /// Reduces any integer modulo 12.
    pub fn wrap(value: i64) -> Self {
        PitchClass(value.rem_euclid(12) as u8)
    }

    pub fn value(self) -> u8 {
        self.0
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn transpose(self, semitones: i32) -> Self {
        PitchClass::wrap(self.0 as i64 + semitones as i64)
    }

    /// Upward interval in semitones from `self` to `other`, in `0..12`.
    pub fn interval_to(self, other: PitchClass) -> u8 {
        (other.0 + 12 - self.0) % 12
    }

    /// Parses a note name such as `C`, `f#`, `Bb` or `E-`. Case is ignored.
    pub fn from_name(name: &str) -> Option<Self> {
        let mut chars = name.chars();
        let letter = chars.next()?.to_ascii_uppercase();
        let base: i64 = match letter {
            'C' => 0,
            'D' => 2,
            'E' => 4,
            'F' => 5,
            'G' => 7,
            'A' => 9,
            'B' => 11,
            _ => return None,
        };
        let mut offset = 0i64;
        for c in chars {
            match c {
                '#' => offset += 1,
                'b' | '-' => offset -= 1,
                _ => return None,
            }
        }
        Some(PitchClass::wrap(base + offset))
    }

    pub fn all() -> impl Iterator<Item = PitchClass> {
        (0..12).map(PitchClass)
    }
}

impl TryFrom<u8> for PitchClass {
    type Error = String;

    fn try_from(value: u8) -> Result<Self, Self::Error> {
        PitchClass::new(value).ok_or_else(|| format!("pitch class {value} out of range 0..=11"))
    }
}

impl From<PitchClass> for u8 {
    fn from(pc: PitchClass) -> u8 {
        pc.0
    }
}

impl fmt::Display for PitchClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(SHARP_NAMES[self.index()])
    }
}

/// A set of pitch classes packed into twelve bits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct PitchClassSet(u16);

impl PitchClassSet {
    pub const EMPTY: PitchClassSet = PitchClassSet(0);

    pub fn from_bits(bits: u16) -> Self {
        PitchClassSet(bits & 0x0fff)
    }

    pub fn bits(self) -> u16 {
        self.0
    }

    /// Builds a set from integers reduced modulo 12.
    pub fn from_semitones<I: IntoIterator<Item = i64>>(values: I) -> Self {
        values.into_iter().map(PitchClass::wrap).collect()
    }

    pub fn insert(&mut self, pc: PitchClass) {
        self.0 |= 1 << pc.0;
    }

    pub fn remove(&mut self, pc: PitchClass) {
        self.0 &= !(1 << pc.0);
    }

    pub fn contains(self, pc: PitchClass) -> bool {
        self.0 & (1 << pc.0) != 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn union(self, other: Self) -> Self {
        PitchClassSet(self.0 | other.0)
    }

    pub fn intersection(self, other: Self) -> Self {
        PitchClassSet(self.0 & other.0)
    }

    pub fn difference(self, other: Self) -> Self {
        PitchClassSet(self.0 & !other.0)
    }

    pub fn is_subset(self, other: Self) -> bool {
        self.0 & !other.0 == 0
    }

    /// Every member moved up by `semitones`.
    pub fn transpose(self, semitones: i32) -> Self {
        self.iter().map(|pc| pc.transpose(semitones)).collect()
    }

    /// The set expressed as intervals above `anchor`.
    pub fn relative_to(self, anchor: PitchClass) -> Self {
        self.transpose(-(anchor.0 as i32))
    }

    pub fn iter(self) -> impl Iterator<Item = PitchClass> {
        (0u8..12).filter(move |i| self.0 & (1 << i) != 0).map(PitchClass)
    }
}

impl FromIterator<PitchClass> for PitchClassSet {
    fn from_iter<I: IntoIterator<Item = PitchClass>>(iter: I) -> Self {
        let mut set = PitchClassSet::EMPTY;
        for pc in iter {
            set.insert(pc);
        }
        set
    }
}

impl fmt::Display for PitchClassSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, pc) in self.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{}", pc.0)?;
        }
        f.write_str("}")
    }
}
