//! Hard structural constraints on tag bigrams.

use crate::scheme::{LabelScheme, TagKind};

/// Which label bigrams (and initial labels) a decoder may use. Everything is
/// allowed unless explicitly forbidden.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransitionMask {
    num_labels: usize,
    begin_allowed: Vec<bool>,
    allowed: Vec<bool>,
}

impl TransitionMask {
    pub fn all_allowed(num_labels: usize) -> Self {
        Self {
            num_labels,
            begin_allowed: vec![true; num_labels],
            allowed: vec![true; num_labels * num_labels],
        }
    }

    pub fn num_labels(&self) -> usize {
        self.num_labels
    }

    #[inline]
    pub fn begin_allowed(&self, label: usize) -> bool {
        self.begin_allowed[label]
    }

    #[inline]
    pub fn allowed(&self, from: usize, to: usize) -> bool {
        self.allowed[from * self.num_labels + to]
    }

    pub fn forbid_begin(&mut self, label: usize) {
        self.begin_allowed[label] = false;
    }

    pub fn forbid(&mut self, from: usize, to: usize) {
        self.allowed[from * self.num_labels + to] = false;
    }

    pub fn forbidden_begin_count(&self) -> usize {
        self.begin_allowed.iter().filter(|&&a| !a).count()
    }

    pub fn forbidden_transition_count(&self) -> usize {
        self.allowed.iter().filter(|&&a| !a).count()
    }
}

/// The BIO mask: a path may not start with `I-X`, and `I-X` may only follow
/// `B-X` or `I-X`.
pub fn transition_mask(scheme: &LabelScheme) -> TransitionMask {
    let labels = scheme.num_tags();
    let mut mask = TransitionMask::all_allowed(labels);
    for to in 0..labels {
        let TagKind::Inside(ty) = scheme.kind(to) else {
            continue;
        };
        mask.forbid_begin(to);
        for from in 0..labels {
            let ok = matches!(
                scheme.kind(from),
                TagKind::Begin(t) | TagKind::Inside(t) if t == ty
            );
            if !ok {
                mask.forbid(from, to);
            }
        }
    }
    mask
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn forbids_orphan_inside() {
        let scheme = LabelScheme::wnut();
        let mask = transition_mask(&scheme);
        let o = scheme.tag_index("O").unwrap();
        let b_action = scheme.tag_index("B-Action").unwrap();
        let i_action = scheme.tag_index("I-Action").unwrap();
        let i_mention = scheme.tag_index("I-Mention").unwrap();

        assert!(!mask.allowed(o, i_action));
        assert!(!mask.allowed(b_action, i_mention));
        assert!(mask.allowed(b_action, i_action));
        assert!(mask.allowed(i_action, i_action));
        assert!(mask.allowed(o, b_action));
        assert!(!mask.begin_allowed(i_action));
        assert!(mask.begin_allowed(b_action));
        assert!(mask.begin_allowed(o));
    }

    #[test]
    fn forbidden_counts_for_wnut() {
        let mask = transition_mask(&LabelScheme::wnut());
        assert_eq!(mask.forbidden_begin_count(), 18);
        assert_eq!(mask.forbidden_transition_count(), 18 * 35);
    }

    #[test]
    fn forbidden_set_matches_rule_by_loop() {
        let scheme = LabelScheme::wnut();
        let mask = transition_mask(&scheme);
        for from in 0..scheme.num_tags() {
            for to in 0..scheme.num_tags() {
                let expect_forbidden = match scheme.kind(to) {
                    TagKind::Inside(ty) => !matches!(
                        scheme.kind(from),
                        TagKind::Begin(t) | TagKind::Inside(t) if t == ty
                    ),
                    _ => false,
                };
                assert_eq!(mask.allowed(from, to), !expect_forbidden, "{from}->{to}");
            }
        }
    }
}
