//! Fixed-length bitstrings keyed by position.
//!
//! Position 0 is the leftmost character. Ordering is lexicographic on the
//! printed string, so position 0 is the most significant digit.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use smallvec::SmallVec;

#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct BitString {
    len: usize,
    words: SmallVec<[u64; 2]>,
}

impl BitString {
    pub fn zeros(len: usize) -> Self {
        Self { len, words: SmallVec::from_elem(0, len.div_ceil(64)) }
    }

    pub fn from_bits(bits: impl IntoIterator<Item = bool>) -> Self {
        let mut out = Self::default();
        for b in bits {
            out.push(b);
        }
        out
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn get(&self, pos: usize) -> bool {
        assert!(pos < self.len, "bit position {pos} out of range {}", self.len);
        self.words[pos / 64] >> (pos % 64) & 1 == 1
    }

    pub fn set(&mut self, pos: usize, value: bool) {
        assert!(pos < self.len, "bit position {pos} out of range {}", self.len);
        let mask = 1u64 << (pos % 64);
        if value {
            self.words[pos / 64] |= mask;
        } else {
            self.words[pos / 64] &= !mask;
        }
    }

    pub fn with(mut self, pos: usize, value: bool) -> Self {
        self.set(pos, value);
        self
    }

    pub fn push(&mut self, value: bool) {
        if self.len.is_multiple_of(64) {
            self.words.push(0);
        }
        self.len += 1;
        self.set(self.len - 1, value);
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(|p| self.get(p))
    }

    /// The string with position `pos` deleted.
    pub fn without(&self, pos: usize) -> Self {
        Self::from_bits(self.iter().enumerate().filter(|&(p, _)| p != pos).map(|(_, b)| b))
    }

    pub fn concat(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for b in other.iter() {
            out.push(b);
        }
        out
    }

    /// Inserts `value` so that it ends up at position `pos`.
    pub fn inserted(&self, pos: usize, value: bool) -> Self {
        let mut out = Self::default();
        for p in 0..=self.len {
            match p.cmp(&pos) {
                Ordering::Less => out.push(self.get(p)),
                Ordering::Equal => out.push(value),
                Ordering::Greater => out.push(self.get(p - 1)),
            }
        }
        out
    }
}

impl Ord for BitString {
    fn cmp(&self, other: &Self) -> Ordering {
        // Reversing each word puts position 0 in the most significant bit.
        self.words
            .iter()
            .map(|w| w.reverse_bits())
            .cmp(other.words.iter().map(|w| w.reverse_bits()))
            .then(self.len.cmp(&other.len))
    }
}

impl PartialOrd for BitString {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.iter() {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "|{self}⟩")
    }
}

#[derive(Debug, PartialEq, Eq)]
pub struct InvalidBit(pub char);

impl FromStr for BitString {
    type Err = InvalidBit;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut out = Self::default();
        for ch in s.chars() {
            match ch {
                '0' => out.push(false),
                '1' => out.push(true),
                other => return Err(InvalidBit(other)),
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn b(s: &str) -> BitString {
        s.parse().unwrap()
    }

    #[test]
    fn positions_follow_the_printed_string() {
        // |0010⟩ has a 1 at 1-based position 3, i.e. 0-based position 2.
        assert!(b("0010").get(2));
        assert!(!b("101").get(1));
        assert_eq!(b("010101").without(2).to_string(), "01101");
        assert_eq!(b("010101").without(0).to_string(), "10101");
    }

    #[test]
    fn ordering_is_lexicographic() {
        let mut v = [b("10"), b("01"), b("11"), b("00")];
        v.sort();
        let s: Vec<String> = v.iter().map(ToString::to_string).collect();
        assert_eq!(s, ["00", "01", "10", "11"]);
        let long_a = BitString::zeros(70).with(65, true);
        let long_b = BitString::zeros(70).with(3, true);
        assert!(long_a < long_b);
    }

    #[test]
    fn insert_concat_and_long_strings() {
        assert_eq!(b("01").inserted(1, true).to_string(), "011");
        assert_eq!(b("01").inserted(0, true).to_string(), "101");
        assert_eq!(b("01").concat(&b("10")).to_string(), "0110");
        let mut long = BitString::zeros(130);
        long.set(129, true);
        long.set(64, true);
        assert_eq!(long.without(0).iter().filter(|&x| x).count(), 2);
        assert!(long.without(0).get(128));
        assert_eq!("01x".parse::<BitString>(), Err(InvalidBit('x')));
    }
}
