//! Domain names as label sequences.
//!
//! A name is an ordered list of labels, root last and implicit. Labels keep
//! the bytes they were built from, but names compare, hash and order
//! case-insensitively (ASCII), as the wire protocol demands.

use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::str::FromStr;

use thiserror::Error;

/// Longest permitted label, in bytes.
pub const MAX_LABEL_LEN: usize = 63;
/// Longest permitted name on the wire, counting length octets and the
/// terminating zero.
pub const MAX_NAME_WIRE_LEN: usize = 255;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum NameError {
    #[error("empty label")]
    EmptyLabel,
    #[error("label exceeds {MAX_LABEL_LEN} bytes")]
    LabelTooLong,
    #[error("name exceeds {MAX_NAME_WIRE_LEN} bytes on the wire")]
    NameTooLong,
}

/// A domain name. `DomainName::root()` is the zero-label root.
#[derive(Clone, Default)]
pub struct DomainName {
    labels: Vec<Vec<u8>>,
}

impl DomainName {
    pub fn root() -> Self {
        DomainName { labels: Vec::new() }
    }

    /// Builds a name from raw labels, validating label and name limits.
    pub fn from_labels<L: Into<Vec<u8>>>(labels: Vec<L>) -> Result<Self, NameError> {
        let labels: Vec<Vec<u8>> = labels.into_iter().map(Into::into).collect();
        let mut wire = 1usize;
        for label in &labels {
            if label.is_empty() {
                return Err(NameError::EmptyLabel);
            }
            if label.len() > MAX_LABEL_LEN {
                return Err(NameError::LabelTooLong);
            }
            wire += 1 + label.len();
        }
        if wire > MAX_NAME_WIRE_LEN {
            return Err(NameError::NameTooLong);
        }
        Ok(DomainName { labels })
    }

    /// Parses dotted text. A trailing dot is accepted and ignored; `"."` and
    /// `""` both denote the root.
    pub fn parse(s: &str) -> Result<Self, NameError> {
        let s = s.strip_suffix('.').unwrap_or(s);
        if s.is_empty() {
            return Ok(Self::root());
        }
        Self::from_labels(s.split('.').map(|l| l.as_bytes().to_vec()).collect())
    }

    pub fn labels(&self) -> &[Vec<u8>] {
        &self.labels
    }

    pub fn label_count(&self) -> usize {
        self.labels.len()
    }

    pub fn is_root(&self) -> bool {
        self.labels.is_empty()
    }

    /// Length of the uncompressed wire encoding, counting length octets and
    /// the terminating zero.
    pub fn wire_len(&self) -> usize {
        self.labels.iter().map(|l| l.len() + 1).sum::<usize>() + 1
    }

    /// The name with its first `skip` labels removed.
    pub fn suffix(&self, skip: usize) -> DomainName {
        DomainName {
            labels: self.labels[skip.min(self.labels.len())..].to_vec(),
        }
    }

    pub fn parent(&self) -> Option<DomainName> {
        if self.is_root() {
            None
        } else {
            Some(self.suffix(1))
        }
    }

    /// True when `self` equals `other` or sits below it.
    pub fn ends_with(&self, other: &DomainName) -> bool {
        if other.labels.len() > self.labels.len() {
            return false;
        }
        let skip = self.labels.len() - other.labels.len();
        self.labels[skip..]
            .iter()
            .zip(&other.labels)
            .all(|(a, b)| eq_label(a, b))
    }

    /// True when `self` sits strictly below `other`.
    pub fn is_subdomain_of(&self, other: &DomainName) -> bool {
        self.labels.len() > other.labels.len() && self.ends_with(other)
    }

    /// Appends `origin`, qualifying a relative name.
    pub fn join(&self, origin: &DomainName) -> Result<DomainName, NameError> {
        let mut labels = self.labels.clone();
        labels.extend(origin.labels.iter().cloned());
        Self::from_labels(labels)
    }

    /// Prepends one label.
    pub fn prepend(&self, label: &str) -> Result<DomainName, NameError> {
        let mut labels = vec![label.as_bytes().to_vec()];
        labels.extend(self.labels.iter().cloned());
        Self::from_labels(labels)
    }

    fn lowered(&self) -> impl Iterator<Item = impl Iterator<Item = u8> + '_> + '_ {
        self.labels
            .iter()
            .map(|l| l.iter().map(|b| b.to_ascii_lowercase()))
    }
}

fn eq_label(a: &[u8], b: &[u8]) -> bool {
    a.len() == b.len()
        && a.iter()
            .zip(b)
            .all(|(x, y)| x.to_ascii_lowercase() == y.to_ascii_lowercase())
}

impl PartialEq for DomainName {
    fn eq(&self, other: &Self) -> bool {
        self.labels.len() == other.labels.len()
            && self
                .labels
                .iter()
                .zip(&other.labels)
                .all(|(a, b)| eq_label(a, b))
    }
}

impl Eq for DomainName {}

impl Hash for DomainName {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.labels.len().hash(state);
        for label in self.lowered() {
            for b in label {
                b.hash(state);
            }
            0xffu8.hash(state);
        }
    }
}

impl Ord for DomainName {
    fn cmp(&self, other: &Self) -> Ordering {
        for (a, b) in self.lowered().zip(other.lowered()) {
            match a.cmp(b) {
                Ordering::Equal => {}
                ord => return ord,
            }
        }
        self.labels.len().cmp(&other.labels.len())
    }
}

impl PartialOrd for DomainName {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for DomainName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_root() {
            return write!(f, ".");
        }
        for label in &self.labels {
            for &b in label {
                if b.is_ascii_graphic() || b == b' ' {
                    write!(f, "{}", b as char)?;
                } else {
                    write!(f, "\\{:03}", b)?;
                }
            }
            write!(f, ".")?;
        }
        Ok(())
    }
}

impl fmt::Debug for DomainName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

impl FromStr for DomainName {
    type Err = NameError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::parse(s)
    }
}
