//! Keys, chords, figured-bass symbols and Roman numerals.
//!
//! Numerals follow the RomanText conventions: case gives the triad quality
//! (upper = major, lower = minor), `o` marks a diminished triad, `ø` a
//! half-diminished seventh, `+` an augmented triad and `maj` a major
//! seventh. In minor keys, lower-case numerals on the sixth and seventh
//! degrees use the raised (melodic) forms, upper-case ones the natural forms.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::pitch::{PitchClass, PitchClassSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Mode {
    Major,
    Minor,
}

const MAJOR_KEY_NAMES: [&str; 12] = ["C", "Db", "D", "Eb", "E", "F", "F#", "G", "Ab", "A", "Bb", "B"];
const MINOR_KEY_NAMES: [&str; 12] = ["c", "c#", "d", "eb", "e", "f", "f#", "g", "g#", "a", "bb", "b"];

/// A key: tonic anchor plus key type. Type 0 reads as major, every other
/// type as minor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct KeyLabel {
    pub anchor: PitchClass,
    pub ktype: u8,
}

impl KeyLabel {
    pub fn new(anchor: PitchClass, mode: Mode) -> Self {
        let ktype = match mode {
            Mode::Major => 0,
            Mode::Minor => 1,
        };
        KeyLabel { anchor, ktype }
    }

    pub fn mode(self) -> Mode {
        if self.ktype == 0 {
            Mode::Major
        } else {
            Mode::Minor
        }
    }

    pub fn transpose(self, semitones: i32) -> Self {
        KeyLabel {
            anchor: self.anchor.transpose(semitones),
            ktype: self.ktype,
        }
    }
}

impl fmt::Display for KeyLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names = match self.mode() {
            Mode::Major => &MAJOR_KEY_NAMES,
            Mode::Minor => &MINOR_KEY_NAMES,
        };
        f.write_str(names[self.anchor.index()])
    }
}

impl FromStr for KeyLabel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let first = s.chars().next().ok_or("empty key")?;
        let pc = PitchClass::from_name(s).ok_or_else(|| format!("unknown key {s:?}"))?;
        let mode = if first.is_ascii_uppercase() {
            Mode::Major
        } else {
            Mode::Minor
        };
        Ok(KeyLabel::new(pc, mode))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TriadQuality {
    Major,
    Minor,
    Diminished,
    Augmented,
}

impl TriadQuality {
    pub fn third(self) -> u8 {
        match self {
            TriadQuality::Major | TriadQuality::Augmented => 4,
            TriadQuality::Minor | TriadQuality::Diminished => 3,
        }
    }

    pub fn fifth(self) -> u8 {
        match self {
            TriadQuality::Major | TriadQuality::Minor => 7,
            TriadQuality::Diminished => 6,
            TriadQuality::Augmented => 8,
        }
    }

    fn is_upper_case(self) -> bool {
        matches!(self, TriadQuality::Major | TriadQuality::Augmented)
    }
}

/// Size of the seventh above the root.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SeventhKind {
    Diminished,
    Minor,
    Major,
}

impl SeventhKind {
    pub fn interval(self) -> u8 {
        match self {
            SeventhKind::Diminished => 9,
            SeventhKind::Minor => 10,
            SeventhKind::Major => 11,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Factor {
    Root,
    Third,
    Fifth,
    Seventh,
}

/// A concrete chord: root, triad quality and optional seventh.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Chord {
    pub root: PitchClass,
    pub quality: TriadQuality,
    pub seventh: Option<SeventhKind>,
}

impl Chord {
    pub fn triad(root: PitchClass, quality: TriadQuality) -> Self {
        Chord {
            root,
            quality,
            seventh: None,
        }
    }

    pub fn with_seventh(self, kind: SeventhKind) -> Self {
        Chord {
            seventh: Some(kind),
            ..self
        }
    }

    pub fn tones(self) -> PitchClassSet {
        let mut set = PitchClassSet::EMPTY;
        for f in [Factor::Root, Factor::Third, Factor::Fifth, Factor::Seventh] {
            if let Some(pc) = self.factor(f) {
                set.insert(pc);
            }
        }
        set
    }

    pub fn factor(self, factor: Factor) -> Option<PitchClass> {
        let interval = match factor {
            Factor::Root => 0,
            Factor::Third => self.quality.third(),
            Factor::Fifth => self.quality.fifth(),
            Factor::Seventh => self.seventh?.interval(),
        };
        Some(self.root.transpose(interval as i32))
    }

    pub fn factor_of(self, pc: PitchClass) -> Option<Factor> {
        [Factor::Root, Factor::Third, Factor::Fifth, Factor::Seventh]
            .into_iter()
            .find(|&f| self.factor(f) == Some(pc))
    }

    pub fn is_dominant_seventh(self) -> bool {
        self.quality == TriadQuality::Major && self.seventh == Some(SeventhKind::Minor)
    }

    pub fn transpose(self, semitones: i32) -> Self {
        Chord {
            root: self.root.transpose(semitones),
            ..self
        }
    }
}

/// Figured-bass symbol: which factor is in the bass and whether a seventh
/// is present.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Figure {
    /// 5/3, written as nothing.
    Root,
    Six,
    SixFour,
    Seven,
    SixFive,
    FourThree,
    Two,
}

impl Figure {
    pub fn new(bass: Factor, seventh: bool) -> Self {
        match (bass, seventh) {
            (Factor::Root, false) => Figure::Root,
            (Factor::Third, false) => Figure::Six,
            (Factor::Fifth, false) => Figure::SixFour,
            (Factor::Root, true) => Figure::Seven,
            (Factor::Third, true) => Figure::SixFive,
            (Factor::Fifth, true) => Figure::FourThree,
            (Factor::Seventh, _) => Figure::Two,
        }
    }

    pub fn has_seventh(self) -> bool {
        matches!(self, Figure::Seven | Figure::SixFive | Figure::FourThree | Figure::Two)
    }

    pub fn bass_factor(self) -> Factor {
        match self {
            Figure::Root | Figure::Seven => Factor::Root,
            Figure::Six | Figure::SixFive => Factor::Third,
            Figure::SixFour | Figure::FourThree => Factor::Fifth,
            Figure::Two => Factor::Seventh,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Figure::Root => "",
            Figure::Six => "6",
            Figure::SixFour => "64",
            Figure::Seven => "7",
            Figure::SixFive => "65",
            Figure::FourThree => "43",
            Figure::Two => "2",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "" | "53" | "5/3" => Figure::Root,
            "6" | "63" | "6/3" => Figure::Six,
            "64" | "6/4" => Figure::SixFour,
            "7" => Figure::Seven,
            "65" | "6/5" => Figure::SixFive,
            "43" | "4/3" => Figure::FourThree,
            "2" | "42" | "4/2" => Figure::Two,
            _ => return None,
        })
    }
}

impl fmt::Display for Figure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

const ROMAN: [&str; 7] = ["I", "II", "III", "IV", "V", "VI", "VII"];
const MAJOR_SCALE: [u8; 7] = [0, 2, 4, 5, 7, 9, 11];
const NATURAL_MINOR_SCALE: [u8; 7] = [0, 2, 3, 5, 7, 8, 10];

/// A Roman numeral without its figure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Numeral {
    /// Chromatic alteration of the scale degree (flats negative).
    pub alteration: i8,
    /// Scale degree 1..=7.
    pub degree: u8,
    pub quality: TriadQuality,
    pub half_diminished: bool,
    pub major_seventh: bool,
}

impl Numeral {
    pub fn implies_seventh(self) -> bool {
        self.half_diminished || self.major_seventh
    }

    /// Semitones from the tonic to the root.
    pub fn root_offset(self, mode: Mode) -> u8 {
        let i = (self.degree - 1) as usize;
        let base = match mode {
            Mode::Major => MAJOR_SCALE[i],
            Mode::Minor => {
                let raised = self.degree >= 6 && !self.quality.is_upper_case();
                NATURAL_MINOR_SCALE[i] + raised as u8
            }
        };
        (base as i16 + self.alteration as i16).rem_euclid(12) as u8
    }

    /// The chord this numeral denotes in `key`, with a seventh iff
    /// `seventh` is set.
    pub fn chord(self, key: KeyLabel, seventh: bool) -> Chord {
        let root = key.anchor.transpose(self.root_offset(key.mode()) as i32);
        let mut chord = Chord::triad(root, self.quality);
        if seventh {
            let kind = if self.major_seventh {
                SeventhKind::Major
            } else if self.quality == TriadQuality::Diminished && !self.half_diminished {
                SeventhKind::Diminished
            } else {
                SeventhKind::Minor
            };
            chord = chord.with_seventh(kind);
        }
        chord
    }

    /// The numeral naming `chord` in `key`. Unaltered degrees are preferred,
    /// then flattened, then sharpened ones.
    pub fn for_chord(chord: Chord, key: KeyLabel) -> Numeral {
        let target = key.anchor.interval_to(chord.root);
        let (half_diminished, major_seventh) = match (chord.quality, chord.seventh) {
            (_, Some(SeventhKind::Major)) => (false, true),
            (TriadQuality::Diminished, Some(SeventhKind::Minor)) => (true, false),
            _ => (false, false),
        };
        for alteration in [0i8, -1, 1] {
            for degree in 1..=7u8 {
                let numeral = Numeral {
                    alteration,
                    degree,
                    quality: chord.quality,
                    half_diminished,
                    major_seventh,
                };
                if numeral.root_offset(key.mode()) == target {
                    return numeral;
                }
            }
        }
        unreachable!("every interval is within one semitone of a scale degree")
    }

    /// Numeral plus a `7` when a seventh is present and not already implied,
    /// e.g. `V7`, `iiø7`, `IV`. Used as the chord identity in progression
    /// statistics, ignoring inversion.
    pub fn symbol(self, seventh: bool) -> String {
        if seventh {
            format!("{self}7")
        } else {
            self.to_string()
        }
    }
}

impl fmt::Display for Numeral {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let accidental = if self.alteration < 0 { "b" } else { "#" };
        for _ in 0..self.alteration.unsigned_abs() {
            f.write_str(accidental)?;
        }
        let roman = ROMAN[(self.degree - 1) as usize];
        if self.quality.is_upper_case() {
            f.write_str(roman)?;
        } else {
            f.write_str(&roman.to_ascii_lowercase())?;
        }
        if self.half_diminished {
            f.write_str("ø")?;
        } else {
            match self.quality {
                TriadQuality::Diminished => f.write_str("o")?,
                TriadQuality::Augmented => f.write_str("+")?,
                _ => {}
            }
        }
        if self.major_seventh {
            f.write_str("maj")?;
        }
        Ok(())
    }
}

/// A numeral with its figure, e.g. `V65`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RomanChord {
    pub numeral: Numeral,
    pub figure: Figure,
}

impl RomanChord {
    pub fn seventh(self) -> bool {
        self.figure.has_seventh()
    }

    pub fn chord(self, key: KeyLabel) -> Chord {
        self.numeral.chord(key, self.seventh())
    }

    /// Names `chord` in `key` with `bass` as the bass note. A bass that is
    /// not a chord tone is read as root position.
    pub fn from_chord(chord: Chord, key: KeyLabel, bass: Option<PitchClass>) -> Self {
        let factor = bass.and_then(|pc| chord.factor_of(pc)).unwrap_or(Factor::Root);
        RomanChord {
            numeral: Numeral::for_chord(chord, key),
            figure: Figure::new(factor, chord.seventh.is_some()),
        }
    }

    /// The inversion-free symbol used for progression statistics.
    pub fn symbol(self) -> String {
        self.numeral.symbol(self.seventh())
    }
}

impl fmt::Display for RomanChord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.numeral, self.figure)
    }
}

impl FromStr for RomanChord {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || format!("unknown numeral symbol {s:?}");
        let mut rest = s;
        let mut alteration = 0i8;
        loop {
            if let Some(r) = rest.strip_prefix('b').or_else(|| rest.strip_prefix('-')) {
                alteration -= 1;
                rest = r;
            } else if let Some(r) = rest.strip_prefix('#') {
                alteration += 1;
                rest = r;
            } else {
                break;
            }
        }
        if alteration.abs() > 2 {
            return Err(err());
        }

        let roman_len = rest
            .find(|c: char| !matches!(c, 'I' | 'V' | 'i' | 'v'))
            .unwrap_or(rest.len());
        let roman = &rest[..roman_len];
        rest = &rest[roman_len..];
        let upper = roman.chars().all(|c| c.is_ascii_uppercase());
        let lower = roman.chars().all(|c| c.is_ascii_lowercase());
        if roman.is_empty() || !(upper || lower) {
            return Err(err());
        }
        let degree = ROMAN
            .iter()
            .position(|r| r.eq_ignore_ascii_case(roman))
            .ok_or_else(err)? as u8
            + 1;

        let mut quality = if upper {
            TriadQuality::Major
        } else {
            TriadQuality::Minor
        };
        let mut half_diminished = false;
        if let Some(r) = rest.strip_prefix('o').or_else(|| rest.strip_prefix('°')) {
            if upper {
                return Err(err());
            }
            quality = TriadQuality::Diminished;
            rest = r;
        } else if let Some(r) = rest.strip_prefix('ø').or_else(|| rest.strip_prefix("/o")) {
            if upper {
                return Err(err());
            }
            quality = TriadQuality::Diminished;
            half_diminished = true;
            rest = r;
        } else if let Some(r) = rest.strip_prefix('+') {
            if lower {
                return Err(err());
            }
            quality = TriadQuality::Augmented;
            rest = r;
        }
        let major_seventh = match rest.strip_prefix("maj") {
            Some(r) => {
                rest = r;
                true
            }
            None => false,
        };
        if half_diminished && major_seventh {
            return Err(err());
        }

        let numeral = Numeral {
            alteration,
            degree,
            quality,
            half_diminished,
            major_seventh,
        };
        let mut figure = Figure::parse(rest).ok_or_else(err)?;
        if numeral.implies_seventh() {
            figure = match rest {
                "" => Figure::Seven,
                _ if figure.has_seventh() => figure,
                // "iiø6" and similar are ambiguous about the seventh's position.
                _ => return Err(err()),
            };
        }
        Ok(RomanChord { numeral, figure })
    }
}
