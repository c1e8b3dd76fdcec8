//! Symbolic note events: the unit of ground truth and transcription output.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum NoteError {
    #[error("note offset {offset_s} must be greater than onset {onset_s}")]
    NonPositiveDuration { onset_s: f64, offset_s: f64 },
    #[error("pitch {0} outside MIDI range [0, 127]")]
    PitchOutOfMidiRange(f64),
    #[error("velocity {0} outside [0, 1]")]
    VelocityOutOfRange(f64),
}

/// One note: onset/offset in seconds, pitch as a float MIDI number
/// (69 = A4 = 440 Hz), velocity in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoteEvent {
    pub onset_s: f64,
    pub offset_s: f64,
    pub pitch_midi: f64,
    pub velocity: f64,
}

impl NoteEvent {
    pub fn new(onset_s: f64, offset_s: f64, pitch_midi: f64, velocity: f64) -> Result<Self, NoteError> {
        let note = Self {
            onset_s,
            offset_s,
            pitch_midi,
            velocity,
        };
        note.validate()?;
        Ok(note)
    }

    pub fn validate(&self) -> Result<(), NoteError> {
        if !(self.offset_s > self.onset_s) {
            return Err(NoteError::NonPositiveDuration {
                onset_s: self.onset_s,
                offset_s: self.offset_s,
            });
        }
        if !(0.0..=127.0).contains(&self.pitch_midi) {
            return Err(NoteError::PitchOutOfMidiRange(self.pitch_midi));
        }
        if !(0.0..=1.0).contains(&self.velocity) {
            return Err(NoteError::VelocityOutOfRange(self.velocity));
        }
        Ok(())
    }

    pub fn duration_s(&self) -> f64 {
        self.offset_s - self.onset_s
    }
}

/// Notes kept sorted by onset time (ties by pitch). Every constructor
/// re-establishes the ordering.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoteList {
    notes: Vec<NoteEvent>,
}

impl NoteList {
    pub fn empty() -> Self {
        Self { notes: Vec::new() }
    }

    /// Sorts the events; does not validate them (see [`NoteList::validated`]).
    pub fn from_events(mut notes: Vec<NoteEvent>) -> Self {
        notes.sort_by(|a, b| {
            (a.onset_s, a.pitch_midi)
                .partial_cmp(&(b.onset_s, b.pitch_midi))
                .expect("note fields must be finite")
        });
        Self { notes }
    }

    pub fn validated(notes: Vec<NoteEvent>) -> Result<Self, NoteError> {
        for n in &notes {
            n.validate()?;
        }
        Ok(Self::from_events(notes))
    }

    pub fn notes(&self) -> &[NoteEvent] {
        &self.notes
    }

    pub fn len(&self) -> usize {
        self.notes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.notes.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, NoteEvent> {
        self.notes.iter()
    }

    /// Latest offset, or 0 for an empty list.
    pub fn span_s(&self) -> f64 {
        self.notes.iter().map(|n| n.offset_s).fold(0.0, f64::max)
    }
}

impl<'a> IntoIterator for &'a NoteList {
    type Item = &'a NoteEvent;
    type IntoIter = std::slice::Iter<'a, NoteEvent>;

    fn into_iter(self) -> Self::IntoIter {
        self.notes.iter()
    }
}

pub fn midi_to_hz(pitch_midi: f64) -> f64 {
    440.0 * ((pitch_midi - 69.0) / 12.0).exp2()
}

pub fn hz_to_midi(freq_hz: f64) -> f64 {
    69.0 + 12.0 * (freq_hz / 440.0).log2()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constructor_sorts_by_onset_then_pitch() {
        let list = NoteList::from_events(vec![
            NoteEvent::new(1.0, 2.0, 70.0, 0.5).unwrap(),
            NoteEvent::new(0.5, 1.0, 60.0, 0.5).unwrap(),
            NoteEvent::new(1.0, 2.0, 65.0, 0.5).unwrap(),
        ]);
        let pitches: Vec<f64> = list.iter().map(|n| n.pitch_midi).collect();
        assert_eq!(pitches, vec![60.0, 65.0, 70.0]);
    }

    #[test]
    fn invalid_notes_are_rejected() {
        assert!(NoteEvent::new(1.0, 1.0, 60.0, 0.5).is_err());
        assert!(NoteEvent::new(0.0, 1.0, 150.0, 0.5).is_err());
        assert!(NoteEvent::new(0.0, 1.0, 60.0, 1.5).is_err());
    }

    #[test]
    fn midi_hz_reference_points() {
        assert!((midi_to_hz(69.0) - 440.0).abs() < 1e-12);
        assert!((hz_to_midi(220.0) - 57.0).abs() < 1e-12);
    }
}
