//! Choosing one representative document per DocDB family.

use std::borrow::Borrow;
use std::cmp::Ordering;

use super::{CorpusError, Document, Result};

/// Authority precedence within a family, highest first. Offices not listed
/// rank below all of these ("Other").
pub const PECKING_ORDER: [&str; 13] = [
    "EP", "WO", "US", "JP", "CN", "KR", "DE", "FR", "GB", "IT", "ES", "SE", "NL",
];

/// Position in [`PECKING_ORDER`]; lower is preferred.
pub fn authority_rank(authority: &str) -> usize {
    PECKING_ORDER
        .iter()
        .position(|a| *a == authority)
        .unwrap_or(PECKING_ORDER.len())
}

fn is_numeric(s: &str) -> bool {
    !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit())
}

/// Total order over application ids: purely numeric ids compare by value and
/// sort before all other ids, which compare lexicographically.
pub fn compare_application_ids(a: &str, b: &str) -> Ordering {
    match (is_numeric(a), is_numeric(b)) {
        (true, true) => {
            let a = a.trim_start_matches('0');
            let b = b.trim_start_matches('0');
            a.len().cmp(&b.len()).then_with(|| a.cmp(b))
        }
        (true, false) => Ordering::Less,
        (false, true) => Ordering::Greater,
        (false, false) => a.cmp(b),
    }
}

/// Picks the family member with the best-ranked authority, breaking ties by
/// the lowest application id and finally by document id.
pub fn select_family_representative<D: Borrow<Document>>(members: &[D]) -> Result<&Document> {
    let first = members.first().ok_or(CorpusError::EmptyFamily)?.borrow();
    let family = first.family_id.as_deref();
    let mut keyed = Vec::with_capacity(members.len());
    for doc in members {
        let doc: &Document = doc.borrow();
        if doc.family_id.as_deref() != family {
            return Err(CorpusError::FamilyMismatch(doc.id.clone()));
        }
        let authority = doc
            .authority
            .as_deref()
            .ok_or_else(|| CorpusError::MissingField {
                id: doc.id.clone(),
                field: "authority",
            })?;
        let application =
            doc.application_id
                .as_deref()
                .ok_or_else(|| CorpusError::MissingField {
                    id: doc.id.clone(),
                    field: "application_id",
                })?;
        keyed.push((authority_rank(authority), application, doc));
    }
    let best = keyed
        .into_iter()
        .min_by(|a, b| {
            a.0.cmp(&b.0)
                .then_with(|| compare_application_ids(a.1, b.1))
                .then_with(|| a.2.id.cmp(&b.2.id))
        })
        .map(|(_, _, doc)| doc);
    Ok(best.expect("non-empty"))
}
