//! Period-gap constants, the winding relation for punctured spheres and
//! validation of bubbling-off trees against the index and period rules.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::orbits::{ClosedOrbit, OrbitLabel};

/// Periods agreeing to this relative tolerance are the same period.
const MERGE_REL_TOL: f64 = 1e-12;
/// Distinct periods closer than this cannot be resolved.
const RESOLUTION_TOL: f64 = 1e-9;

/// Periods up to a bound `C`, sorted ascending.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodCatalog {
    entries: Vec<(String, f64)>,
    bound: f64,
}

impl PeriodCatalog {
    /// Keeps the entries with period at most `bound`.
    pub fn new(entries: Vec<(String, f64)>, bound: f64) -> Result<Self> {
        if !(bound > 0.0) {
            return Err(Error::Precondition(format!(
                "bound must be positive, got {bound}"
            )));
        }
        if let Some((l, t)) = entries.iter().find(|(_, t)| !(*t > 0.0 && t.is_finite())) {
            return Err(Error::Precondition(format!(
                "period of {l} must be positive, got {t}"
            )));
        }
        let mut entries: Vec<_> = entries.into_iter().filter(|(_, t)| *t <= bound).collect();
        entries.sort_by(|a, b| a.1.total_cmp(&b.1));
        Ok(Self { entries, bound })
    }

    pub fn from_orbits(orbits: &[ClosedOrbit], bound: f64) -> Result<Self> {
        let entries = orbits
            .iter()
            .map(|o| {
                let name = match o.label {
                    Some(OrbitLabel::K) => "K",
                    Some(OrbitLabel::KPrime) => "K'",
                    None => "P",
                };
                (format!("{name}^{}", o.multiplicity), o.period())
            })
            .collect();
        Self::new(entries, bound)
    }

    pub fn entries(&self) -> &[(String, f64)] {
        &self.entries
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }

    /// Sorted distinct periods.
    pub fn distinct_periods(&self) -> Vec<f64> {
        let mut out: Vec<f64> = Vec::new();
        for &(_, t) in &self.entries {
            match out.last() {
                Some(&last) if (t - last).abs() <= MERGE_REL_TOL * t => {}
                _ => out.push(t),
            }
        }
        out
    }
}

/// `σ(C)`: half of `inf {T′, |T′ − T″|}` over distinct periods up to `C`.
pub fn sigma_gap(cat: &PeriodCatalog) -> Result<f64> {
    let periods = cat.distinct_periods();
    let first = *periods
        .first()
        .ok_or_else(|| Error::Precondition("no periods below the bound".into()))?;
    let mut inf = first;
    for w in periods.windows(2) {
        let gap = w[1] - w[0];
        if gap < RESOLUTION_TOL {
            return Err(Error::Resolution(w[0], w[1]));
        }
        inf = inf.min(gap);
    }
    Ok(0.5 * inf)
}

/// Asymptotic winding data of a punctured sphere.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CurveWindingData {
    pub wind_inf_positive: Vec<i64>,
    pub wind_inf_negative: Vec<i64>,
    pub euler_char: i64,
    pub puncture_count: usize,
}

impl CurveWindingData {
    pub fn new(positive: Vec<i64>, negative: Vec<i64>, euler_char: i64) -> Result<Self> {
        let n = positive.len() + negative.len();
        if n == 0 {
            return Err(Error::Precondition("at least one puncture is required".into()));
        }
        Ok(Self {
            wind_inf_positive: positive,
            wind_inf_negative: negative,
            euler_char,
            puncture_count: n,
        })
    }

    /// `wind_∞ = Σ positive − Σ negative`.
    pub fn wind_inf(&self) -> i64 {
        self.wind_inf_positive.iter().sum::<i64>() - self.wind_inf_negative.iter().sum::<i64>()
    }
}

/// `wind_π = wind_∞ − χ + #Γ`.
pub fn wind_pi_from_relation(d: &CurveWindingData) -> i64 {
    d.wind_inf() - d.euler_char + d.puncture_count as i64
}

/// Whether the data are compatible with `wind_π ≥ 0`.
pub fn is_feasible(d: &CurveWindingData) -> bool {
    wind_pi_from_relation(d) >= 0
}

/// Label of a negative puncture.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Puncture {
    pub period: f64,
    pub mu: i64,
}

/// A finite-energy sphere of the tree: its positive-puncture limit, and the
/// spheres hanging off its negative punctures.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeVertex {
    pub period: f64,
    pub mu: i64,
    #[serde(default)]
    pub children: Vec<TreeVertex>,
    /// Negative-puncture labels. When omitted they are read off the children.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub punctures: Option<Vec<Puncture>>,
    /// `∫ v*dλ > 0`, for the optional area rule.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub area_positive: Option<bool>,
    /// `wind_∞` at the positive puncture, for the optional area rule.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wind_inf: Option<i64>,
}

impl TreeVertex {
    pub fn leaf(period: f64, mu: i64) -> Self {
        Self {
            period,
            mu,
            children: Vec::new(),
            punctures: None,
            area_positive: None,
            wind_inf: None,
        }
    }

    pub fn with_children(mut self, children: Vec<TreeVertex>) -> Self {
        self.children = children;
        self
    }

    fn puncture_labels(&self) -> Vec<Puncture> {
        match &self.punctures {
            Some(p) => p.clone(),
            None => self
                .children
                .iter()
                .map(|c| Puncture {
                    period: c.period,
                    mu: c.mu,
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BubblingTree {
    pub root: TreeVertex,
    /// Energy bound `C`.
    pub bound: f64,
}

/// Tree rules.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Rule {
    /// Child periods drop by more than `σ`.
    #[serde(rename = "a")]
    PeriodDrop,
    /// Every index label is at least 2.
    #[serde(rename = "b")]
    IndexAtLeastTwo,
    /// Index 2 at the top with children of index ≥ 2 forces index 2 below.
    #[serde(rename = "c")]
    IndexPropagation,
    /// Leaves are planes.
    #[serde(rename = "d")]
    LeavesArePlanes,
    /// All periods within the energy bound.
    #[serde(rename = "e")]
    EnergyBound,
    /// With positive area and `wind_∞ ≤ 1`, children of index ≥ 2 have index 2.
    #[serde(rename = "f")]
    AreaPositive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub rule: Rule,
    /// Child indices from the root.
    pub path: Vec<usize>,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeReport {
    pub sigma: f64,
    pub passed: bool,
    pub violations: Vec<Violation>,
}

fn check_structure(v: &TreeVertex, path: &mut Vec<usize>) -> Result<()> {
    if !(v.period > 0.0 && v.period.is_finite()) {
        return Err(Error::Structural(format!(
            "vertex {path:?} has period {}",
            v.period
        )));
    }
    if let Some(p) = &v.punctures {
        if let Some(bad) = p.iter().find(|x| !(x.period > 0.0 && x.period.is_finite())) {
            return Err(Error::Structural(format!(
                "vertex {path:?} has a puncture of period {}",
                bad.period
            )));
        }
        if !v.children.is_empty() {
            if p.len() != v.children.len() {
                return Err(Error::Structural(format!(
                    "vertex {path:?}: {} puncture(s) but {} child vertex(es)",
                    p.len(),
                    v.children.len()
                )));
            }
            for (i, (x, c)) in p.iter().zip(&v.children).enumerate() {
                if x.period != c.period || x.mu != c.mu {
                    return Err(Error::Structural(format!(
                        "edge {i} below {path:?} is labelled ({}, {}) but its vertex has ({}, {})",
                        x.period, x.mu, c.period, c.mu
                    )));
                }
            }
        }
    }
    for (i, c) in v.children.iter().enumerate() {
        path.push(i);
        check_structure(c, path)?;
        path.pop();
    }
    Ok(())
}

fn check_vertex(v: &TreeVertex, sigma: f64, bound: f64, path: &mut Vec<usize>, out: &mut Vec<Violation>) {
    let mut push = |rule, detail: String, path: &Vec<usize>| {
        out.push(Violation {
            rule,
            path: path.clone(),
            detail,
        })
    };
    let punctures = v.puncture_labels();
    for x in &punctures {
        if !(x.period < v.period - sigma) {
            push(
                Rule::PeriodDrop,
                format!("child period {} not below {} − σ", x.period, v.period),
                path,
            );
        }
    }
    if v.mu < 2 {
        push(Rule::IndexAtLeastTwo, format!("index {} < 2", v.mu), path);
    }
    if v.children.is_empty() {
        for x in punctures.iter().filter(|x| x.mu < 2) {
            push(
                Rule::IndexAtLeastTwo,
                format!("puncture index {} < 2", x.mu),
                path,
            );
        }
    }
    let all_ge2 = punctures.iter().all(|x| x.mu >= 2);
    if v.mu == 2 && all_ge2 && punctures.iter().any(|x| x.mu != 2) {
        push(
            Rule::IndexPropagation,
            "index 2 above children of index ≥ 2 forces index 2".into(),
            path,
        );
    }
    if v.children.is_empty() && !punctures.is_empty() {
        push(
            Rule::LeavesArePlanes,
            format!("leaf has {} negative puncture(s)", punctures.len()),
            path,
        );
    }
    if v.period > bound {
        push(
            Rule::EnergyBound,
            format!("period {} exceeds bound {bound}", v.period),
            path,
        );
    }
    if v.children.is_empty() {
        for x in punctures.iter().filter(|x| x.period > bound) {
            push(
                Rule::EnergyBound,
                format!("puncture period {} exceeds bound {bound}", x.period),
                path,
            );
        }
    }
    if let (Some(true), Some(w)) = (v.area_positive, v.wind_inf) {
        if w <= 1 && all_ge2 && punctures.iter().any(|x| x.mu != 2) {
            push(
                Rule::AreaPositive,
                format!("positive area with wind_inf = {w} forces index 2 below"),
                path,
            );
        }
    }
    for (i, c) in v.children.iter().enumerate() {
        path.push(i);
        check_vertex(c, sigma, bound, path, out);
        path.pop();
    }
}

/// Checks every vertex against the tree rules. Structural defects are errors;
/// rule violations are collected in the report.
pub fn validate_tree(t: &BubblingTree, sigma: f64) -> Result<TreeReport> {
    if !(sigma > 0.0) {
        return Err(Error::Precondition(format!("σ must be positive, got {sigma}")));
    }
    if !(t.bound > 0.0) {
        return Err(Error::Structural(format!(
            "energy bound must be positive, got {}",
            t.bound
        )));
    }
    check_structure(&t.root, &mut Vec::new())?;
    let mut violations = Vec::new();
    check_vertex(&t.root, sigma, t.bound, &mut Vec::new(), &mut violations);
    Ok(TreeReport {
        sigma,
        passed: violations.is_empty(),
        violations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn cat(ts: &[f64], c: f64) -> PeriodCatalog {
        PeriodCatalog::new(ts.iter().map(|t| ("P".to_string(), *t)).collect(), c).unwrap()
    }

    #[test]
    fn sigma_examples() {
        assert!((sigma_gap(&cat(&[PI, 2.0 * PI, 3.0 * PI], 10.0)).unwrap() - PI / 2.0).abs() < 1e-15);
        assert_eq!(sigma_gap(&cat(&[1.0], 10.0)).unwrap(), 0.5);
        assert!(sigma_gap(&cat(&[11.0], 10.0)).is_err());
        assert!(matches!(
            sigma_gap(&cat(&[1.0, 1.0 + 1e-10], 10.0)),
            Err(Error::Resolution(..))
        ));
        // repeated periods from different orbits count once
        assert_eq!(sigma_gap(&cat(&[2.0, 2.0, 3.0], 10.0)).unwrap(), 0.5);
    }

    #[test]
    fn wind_relation_examples() {
        let plane = CurveWindingData::new(vec![1], vec![], 2).unwrap();
        assert_eq!(wind_pi_from_relation(&plane), 0);
        let slow = CurveWindingData::new(vec![0], vec![], 2).unwrap();
        assert_eq!(wind_pi_from_relation(&slow), -1);
        assert!(!is_feasible(&slow));
        let cyl = CurveWindingData::new(vec![1], vec![1], 2).unwrap();
        assert_eq!(wind_pi_from_relation(&cyl), 0);
        assert!(CurveWindingData::new(vec![], vec![], 2).is_err());
    }

    fn valid_tree() -> BubblingTree {
        BubblingTree {
            root: TreeVertex::leaf(3.0, 2)
                .with_children(vec![TreeVertex::leaf(1.0, 2), TreeVertex::leaf(1.5, 2)]),
            bound: 5.0,
        }
    }

    fn rules(r: &TreeReport) -> Vec<Rule> {
        let mut v: Vec<Rule> = r.violations.iter().map(|x| x.rule).collect();
        v.dedup();
        v
    }

    #[test]
    fn tree_examples() {
        let single = BubblingTree {
            root: TreeVertex::leaf(2.0, 3),
            bound: 5.0,
        };
        assert!(validate_tree(&single, 0.1).unwrap().passed);
        assert!(validate_tree(&valid_tree(), 0.4).unwrap().passed);
        let t = BubblingTree {
            root: TreeVertex::leaf(3.0, 2).with_children(vec![TreeVertex::leaf(2.8, 2)]),
            bound: 5.0,
        };
        let r = validate_tree(&t, 0.4).unwrap();
        assert_eq!(rules(&r), vec![Rule::PeriodDrop]);
        assert!(validate_tree(&t, 0.0).is_err());
    }

    #[test]
    fn dangling_edge_is_structural() {
        let mut t = valid_tree();
        t.root.punctures = Some(vec![Puncture { period: 1.0, mu: 2 }]);
        assert!(matches!(validate_tree(&t, 0.4), Err(Error::Structural(_))));
        t.root.punctures = Some(vec![
            Puncture { period: 1.0, mu: 2 },
            Puncture { period: 1.4, mu: 2 },
        ]);
        assert!(matches!(validate_tree(&t, 0.4), Err(Error::Structural(_))));
    }

    #[test]
    fn area_rule_is_optional() {
        let mut t = BubblingTree {
            root: TreeVertex::leaf(3.0, 4).with_children(vec![TreeVertex::leaf(1.0, 3)]),
            bound: 5.0,
        };
        assert!(validate_tree(&t, 0.4).unwrap().passed);
        t.root.area_positive = Some(true);
        t.root.wind_inf = Some(1);
        assert_eq!(rules(&validate_tree(&t, 0.4).unwrap()), vec![Rule::AreaPositive]);
        t.root.wind_inf = Some(2);
        assert!(validate_tree(&t, 0.4).unwrap().passed);
    }

    #[test]
    fn tree_json_round_trip() {
        let json = r#"{"bound": 5, "root": {"period": 3, "mu": 2,
            "children": [{"period": 1, "mu": 2}, {"period": 1.5, "mu": 2}]}}"#;
        let t: BubblingTree = serde_json::from_str(json).unwrap();
        assert_eq!(t, valid_tree());
        let back: BubblingTree = serde_json::from_str(&serde_json::to_string(&t).unwrap()).unwrap();
        assert_eq!(back, t);
    }
}
