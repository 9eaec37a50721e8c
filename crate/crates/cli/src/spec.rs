//! Family and oracle spec files.
//!
//! A family spec is a JSON object with a `members` array; each member has a
//! `label`, a `kind` and the parameters of that kind:
//!
//! ```json
//! {"members": [
//!   {"label": "L3", "kind": "level", "n": 3},
//!   {"label": "H", "kind": "hair-of-branch", "stem": "2", "period": "0"},
//!   {"label": "P", "kind": "pi-image-of", "of": "L3"}
//! ]}
//! ```
//!
//! Branches are given as a stem and a nonempty period, both node literals.

use serde::Deserialize;

use offbranch::error::FamilyError;
use offbranch::families::{Family, LazyNodeSet};
use offbranch::sacks::{ground_set_name, NameOracle, SelectorName};
use offbranch::treecore::{EpBranch, Node};

use crate::CliError;

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum KindSpec {
    Explicit { nodes: Vec<Node> },
    Level { n: usize },
    BranchPrefixes { stem: Node, period: Node },
    HairOfBranch { stem: Node, period: Node },
    ZerosThenOne,
    PiImageOf { of: String },
}

#[derive(Debug, Clone, Deserialize)]
struct MemberSpec {
    label: String,
    #[serde(flatten)]
    kind: KindSpec,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct FamilySpec {
    members: Vec<MemberSpec>,
}

fn branch(stem: &Node, period: &Node) -> Result<EpBranch, CliError> {
    EpBranch::new(stem.coords().to_vec(), period.coords().to_vec())
        .map_err(|e| CliError::Input(e.to_string()))
}

/// Builds the set for a kind; `lookup` resolves `pi-image-of` references.
fn materialize(
    kind: &KindSpec,
    lookup: impl Fn(&str) -> Option<LazyNodeSet>,
) -> Result<LazyNodeSet, CliError> {
    Ok(match kind {
        KindSpec::Explicit { nodes } => LazyNodeSet::explicit(nodes.iter().cloned()),
        KindSpec::Level { n } => LazyNodeSet::level(*n),
        KindSpec::BranchPrefixes { stem, period } => {
            LazyNodeSet::branch_prefixes(branch(stem, period)?)
        }
        KindSpec::HairOfBranch { stem, period } => {
            LazyNodeSet::hair_of_branch(branch(stem, period)?)
        }
        KindSpec::ZerosThenOne => LazyNodeSet::zeros_then_one(),
        KindSpec::PiImageOf { of } => {
            LazyNodeSet::pi_image(lookup(of).ok_or_else(|| CliError::UnknownReference(of.clone()))?)
        }
    })
}

fn parse_json<'a, T: Deserialize<'a>>(text: &'a str) -> Result<T, CliError> {
    serde_json::from_str(text).map_err(|e| CliError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })
}

pub fn parse_family_spec(text: &str) -> Result<Family, CliError> {
    let spec: FamilySpec = parse_json(text)?;
    let mut family = Family::default();
    for m in &spec.members {
        let set = materialize(&m.kind, |l| family.get(l).cloned())?;
        family.push(m.label.clone(), set).map_err(|e| match e {
            FamilyError::DuplicateLabel(l) => CliError::DuplicateLabel(l),
            other => CliError::Input(other.to_string()),
        })?;
    }
    Ok(family)
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
enum OracleSpec {
    /// A ground-model set, revealed in order up to `probe_depth`.
    GroundSet { set: KindSpec, probe_depth: usize },
    /// `{c_{2k+g(k)}}` for the generic real `g` at `coordinate`, with the
    /// `c_i` the first `count` elements of `candidates` within `depth`.
    Selector {
        candidates: KindSpec,
        count: usize,
        depth: usize,
        coordinate: usize,
    },
}

/// A parsed oracle together with the set its revelations must come from.
pub struct Oracle {
    pub name: Box<dyn NameOracle>,
    pub universe: LazyNodeSet,
}

pub fn parse_oracle_spec(text: &str) -> Result<Oracle, CliError> {
    let spec: OracleSpec = parse_json(text)?;
    let no_refs = |_: &str| None;
    Ok(match spec {
        OracleSpec::GroundSet { set, probe_depth } => {
            let set = materialize(&set, no_refs)?;
            Oracle {
                name: Box::new(ground_set_name(set.clone(), probe_depth)),
                universe: set,
            }
        }
        OracleSpec::Selector {
            candidates,
            count,
            depth,
            coordinate,
        } => {
            let cands: Vec<Node> = materialize(&candidates, no_refs)?
                .iter_upto(depth)
                .take(count)
                .collect();
            Oracle {
                universe: LazyNodeSet::explicit(cands.iter().cloned()),
                name: Box::new(SelectorName::new(cands, coordinate)),
            }
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use offbranch::treecore::NodeSet;

    fn nodes(xs: &[&str]) -> NodeSet {
        xs.iter().map(|s| s.parse().unwrap()).collect()
    }

    #[test]
    fn level_member() {
        let f = parse_family_spec(r#"{"members":[{"label":"L3","kind":"level","n":3}]}"#).unwrap();
        assert_eq!(f.labels(), vec!["L3"]);
        let t = f.get("L3").unwrap().enumerate_upto(4);
        assert_eq!(t.len(), 64);
        assert!(t.iter().all(|s| s.coords().len() == 3));
    }

    #[test]
    fn unknown_kind_is_named() {
        let err = parse_family_spec(r#"{"members":[{"label":"x","kind":"foo"}]}"#).unwrap_err();
        match err {
            CliError::Parse { message, line, .. } => {
                assert!(message.contains("foo"), "{message}");
                assert_eq!(line, 1);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn parse_error_position() {
        let text = "{\"members\": [\n  {\"label\": \"a\", \"kind\": \"level\", \"n\": }\n]}";
        match parse_family_spec(text).unwrap_err() {
            CliError::Parse { line, column, .. } => {
                assert_eq!(line, 2);
                assert!(column > 1);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn zeros_then_one_member() {
        let f =
            parse_family_spec(r#"{"members":[{"label":"Z","kind":"zeros-then-one"}]}"#).unwrap();
        assert_eq!(
            f.get("Z").unwrap().enumerate_upto(5),
            nodes(&["1", "0.1", "0.0.1", "0.0.0.1"])
        );
    }

    #[test]
    fn references_and_duplicates() {
        let ok = r#"{"members":[
            {"label":"A","kind":"explicit","nodes":["2.1","0"]},
            {"label":"P","kind":"pi-image-of","of":"A"}]}"#;
        let f = parse_family_spec(ok).unwrap();
        assert_eq!(
            f.get("P").unwrap().enumerate_upto(6),
            nodes(&["0", "1.1.0.1.0"])
        );

        let forward = r#"{"members":[{"label":"P","kind":"pi-image-of","of":"A"}]}"#;
        assert!(matches!(
            parse_family_spec(forward),
            Err(CliError::UnknownReference(_))
        ));

        let dup = r#"{"members":[{"label":"A","kind":"level","n":1},{"label":"A","kind":"level","n":2}]}"#;
        assert!(matches!(
            parse_family_spec(dup),
            Err(CliError::DuplicateLabel(_))
        ));

        let bad_node = r#"{"members":[{"label":"A","kind":"explicit","nodes":["1.x"]}]}"#;
        assert!(matches!(
            parse_family_spec(bad_node),
            Err(CliError::Parse { .. })
        ));

        let no_period =
            r#"{"members":[{"label":"B","kind":"branch-prefixes","stem":"1","period":"e"}]}"#;
        assert!(matches!(
            parse_family_spec(no_period),
            Err(CliError::Input(_))
        ));
    }

    #[test]
    fn oracle_specs() {
        let o = parse_oracle_spec(
            r#"{"kind":"ground-set","probe_depth":6,"set":{"kind":"level","n":2}}"#,
        )
        .unwrap();
        assert!(o.universe.contains(&"3.4".parse().unwrap()));
        let o = parse_oracle_spec(
            r#"{"kind":"selector","count":10,"depth":5,"coordinate":1,"candidates":{"kind":"level","n":2}}"#,
        )
        .unwrap();
        assert_eq!(o.universe.enumerate_upto(10).len(), 10);
        assert!(parse_oracle_spec(
            r#"{"kind":"ground-set","probe_depth":6,"set":{"kind":"pi-image-of","of":"x"}}"#
        )
        .is_err());
    }
}
