use std::collections::BTreeMap;
use std::path::Path;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::Rng;

/// `(agent − random) / (human − random)`.
pub fn normalized_score(agent: f64, random: f64, human: f64) -> Result<f64> {
    if human == random {
        return Err(Error::Normalization(format!(
            "human and random scores are both {human}"
        )));
    }
    Ok((agent - random) / (human - random))
}

/// Normalised score clipped to `[0, 1]`.
pub fn capped_normalized_score(agent: f64, random: f64, human: f64) -> Result<f64> {
    Ok(normalized_score(agent, random, human)?.clamp(0.0, 1.0))
}

/// `agent / ppo_mean`.
pub fn ppo_normalized_score(agent: f64, ppo_mean: f64) -> Result<f64> {
    if ppo_mean == 0.0 {
        return Err(Error::Normalization("PPO mean score is 0".into()));
    }
    Ok(agent / ppo_mean)
}

/// Interquartile mean: sort, drop `floor(n/4)` from each end, average the rest.
pub fn iqm(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::Usage("interquartile mean of an empty list".into()));
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let k = v.len() / 4;
    let mid = &v[k..v.len() - k];
    Ok(mid.iter().sum::<f64>() / mid.len() as f64)
}

/// Linear-interpolation quantile of sorted data.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRow {
    pub algorithm: String,
    pub task: String,
    pub seed: u64,
    pub score: f64,
}

/// Final scores keyed by algorithm, then task, in seed order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ScoreTable {
    pub scores: BTreeMap<String, BTreeMap<String, Vec<(u64, f64)>>>,
}

impl ScoreTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, algorithm: &str, task: &str, seed: u64, score: f64) {
        let runs = self
            .scores
            .entry(algorithm.to_string())
            .or_default()
            .entry(task.to_string())
            .or_default();
        runs.push((seed, score));
        runs.sort_by_key(|r| r.0);
    }

    pub fn algorithms(&self) -> Vec<&str> {
        self.scores.keys().map(String::as_str).collect()
    }

    pub fn tasks(&self, algorithm: &str) -> Vec<&str> {
        self.scores
            .get(algorithm)
            .map(|t| t.keys().map(String::as_str).collect())
            .unwrap_or_default()
    }

    pub fn runs(&self, algorithm: &str, task: &str) -> Option<Vec<f64>> {
        self.scores
            .get(algorithm)?
            .get(task)
            .map(|r| r.iter().map(|x| x.1).collect())
    }

    fn algorithm(&self, name: &str) -> Result<&BTreeMap<String, Vec<(u64, f64)>>> {
        self.scores
            .get(name)
            .ok_or_else(|| Error::Usage(format!("no scores for algorithm {name:?}")))
    }

    /// Every score of one algorithm pooled over tasks and seeds.
    pub fn pooled(&self, algorithm: &str) -> Result<Vec<f64>> {
        Ok(self.algorithm(algorithm)?.values().flatten().map(|r| r.1).collect())
    }

    pub fn rows(&self) -> Vec<ScoreRow> {
        let mut out = Vec::new();
        for (a, tasks) in &self.scores {
            for (t, runs) in tasks {
                for &(seed, score) in runs {
                    out.push(ScoreRow {
                        algorithm: a.clone(),
                        task: t.clone(),
                        seed,
                        score,
                    });
                }
            }
        }
        out
    }

    pub fn merge(&mut self, other: &ScoreTable) {
        for r in other.rows() {
            self.insert(&r.algorithm, &r.task, r.seed, r.score);
        }
    }

    pub fn from_reader<R: std::io::Read>(reader: R, path: &Path) -> Result<Self> {
        let mut t = Self::new();
        let mut rdr = csv::Reader::from_reader(reader);
        for row in rdr.deserialize() {
            let r: ScoreRow = row.map_err(|e| Error::csv(path, e))?;
            t.insert(&r.algorithm, &r.task, r.seed, r.score);
        }
        Ok(t)
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::from_reader(f, path)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
        for r in self.rows() {
            w.serialize(&r).map_err(|e| Error::csv(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    /// Table with every score normalised against its task's baseline.
    pub fn normalized(&self, baselines: &Baselines) -> Result<ScoreTable> {
        let mut out = ScoreTable::new();
        for r in self.rows() {
            let b = baselines
                .get(&r.task)
                .ok_or_else(|| Error::Usage(format!("no baseline for task {:?}", r.task)))?;
            out.insert(&r.algorithm, &r.task, r.seed, b.normalize(r.score, false)?);
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Baseline {
    HumanRandom { random: f64, human: f64 },
    PpoMean(f64),
}

impl Baseline {
    pub fn normalize(&self, score: f64, capped: bool) -> Result<f64> {
        match *self {
            Baseline::HumanRandom { random, human } if capped => capped_normalized_score(score, random, human),
            Baseline::HumanRandom { random, human } => normalized_score(score, random, human),
            Baseline::PpoMean(m) => ppo_normalized_score(score, m),
        }
    }
}

pub type Baselines = BTreeMap<String, Baseline>;

/// Reads `task,random_score,human_score` or `task,ppo_mean`.
pub fn read_baselines(path: &Path) -> Result<Baselines> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| Error::csv(path, e))?;
    let headers = rdr.headers().map_err(|e| Error::csv(path, e))?.clone();
    let col = |name: &str| headers.iter().position(|h| h.trim() == name);
    let task = col("task").ok_or_else(|| Error::Usage(format!("{} lacks a task column", path.display())))?;
    let mode = match (col("random_score"), col("human_score"), col("ppo_mean")) {
        (Some(r), Some(h), _) => (Some((r, h)), None),
        (_, _, Some(p)) => (None, Some(p)),
        _ => {
            return Err(Error::Usage(format!(
                "{} needs random_score,human_score or ppo_mean columns",
                path.display()
            )))
        }
    };
    let mut out = Baselines::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::csv(path, e))?;
        let num = |i: usize| -> Result<f64> {
            rec.get(i)
                .and_then(|v| v.trim().parse().ok())
                .ok_or_else(|| Error::Usage(format!("bad number in {} row {:?}", path.display(), rec)))
        };
        let b = match mode {
            (Some((r, h)), _) => Baseline::HumanRandom {
                random: num(r)?,
                human: num(h)?,
            },
            (_, Some(p)) => Baseline::PpoMean(num(p)?),
            _ => unreachable!(),
        };
        out.insert(rec.get(task).unwrap_or_default().trim().to_string(), b);
    }
    Ok(out)
}

/// IQM of an algorithm's runs pooled across tasks.
pub fn iqm_pooled(table: &ScoreTable, algorithm: &str) -> Result<f64> {
    iqm(&table.pooled(algorithm)?)
}

/// Mean over tasks of each task's IQM.
pub fn iqm_per_task(table: &ScoreTable, algorithm: &str) -> Result<f64> {
    let tasks = table.algorithm(algorithm)?;
    let mut total = 0.0;
    for runs in tasks.values() {
        total += iqm(&runs.iter().map(|r| r.1).collect::<Vec<_>>())?;
    }
    Ok(total / tasks.len() as f64)
}

/// `P(X > Y)` with ties counted as one half.
pub fn pairwise_improvement(x: &[f64], y: &[f64]) -> f64 {
    let mut wins = 0.0;
    for a in x {
        for b in y {
            if a > b {
                wins += 1.0;
            } else if a == b {
                wins += 0.5;
            }
        }
    }
    wins / (x.len() * y.len()) as f64
}

/// Probability of improvement of `x` over `y`, averaged over shared tasks.
pub fn probability_of_improvement(table: &ScoreTable, x: &str, y: &str) -> Result<f64> {
    let tx = table.algorithm(x)?;
    let ty = table.algorithm(y)?;
    let mut total = 0.0;
    let mut n = 0usize;
    for (task, xs) in tx {
        if let Some(ys) = ty.get(task) {
            if xs.is_empty() || ys.is_empty() {
                continue;
            }
            let a: Vec<f64> = xs.iter().map(|r| r.1).collect();
            let b: Vec<f64> = ys.iter().map(|r| r.1).collect();
            total += pairwise_improvement(&a, &b);
            n += 1;
        }
    }
    if n == 0 {
        return Err(Error::Usage(format!("{x:?} and {y:?} share no tasks")));
    }
    Ok(total / n as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Interval {
    pub point: f64,
    pub low: f64,
    pub high: f64,
}

/// Percentile bootstrap, resampling seeds with replacement within every
/// (algorithm, task) cell.
pub fn bootstrap_ci<F>(table: &ScoreTable, statistic: F, resamples: usize, confidence: f64, rng: &mut Rng) -> Result<Interval>
where
    F: Fn(&ScoreTable) -> Result<f64>,
{
    if resamples < 100 {
        return Err(Error::Usage(format!("bootstrap needs at least 100 resamples, got {resamples}")));
    }
    if !(0.0..1.0).contains(&confidence) {
        return Err(Error::Usage(format!("confidence {confidence} outside [0, 1)")));
    }
    let point = statistic(table)?;
    let mut draws = Vec::with_capacity(resamples);
    for _ in 0..resamples {
        let mut t = ScoreTable::new();
        for (a, tasks) in &table.scores {
            let cells = t.scores.entry(a.clone()).or_default();
            for (task, runs) in tasks {
                let picked = (0..runs.len()).map(|i| (i as u64, runs[rng.random_range(0..runs.len())].1)).collect();
                cells.insert(task.clone(), picked);
            }
        }
        draws.push(statistic(&t)?);
    }
    draws.sort_by(f64::total_cmp);
    let alpha = (1.0 - confidence) / 2.0;
    Ok(Interval {
        point,
        low: quantile(&draws, alpha),
        high: quantile(&draws, 1.0 - alpha),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Stream};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn normalization_endpoints() {
        assert_eq!(normalized_score(200.0, 0.0, 200.0).unwrap(), 1.0);
        assert_eq!(normalized_score(-3.0, -3.0, 9.0).unwrap(), 0.0);
        assert_eq!(capped_normalized_score(50.0, 0.0, 200.0).unwrap(), 0.25);
        assert_eq!(capped_normalized_score(500.0, 0.0, 200.0).unwrap(), 1.0);
        assert!(matches!(normalized_score(1.0, 2.0, 2.0), Err(Error::Normalization(_))));
        assert_eq!(ppo_normalized_score(3.0, 2.0).unwrap(), 1.5);
    }

    #[test]
    fn iqm_examples() {
        assert_eq!(iqm(&[1.0, 2.0, 3.0, 4.0]).unwrap(), 2.5);
        assert_eq!(iqm(&[0.0, 0.0, 0.0, 1000.0]).unwrap(), 0.0);
        assert!(matches!(iqm(&[]), Err(Error::Usage(_))));
    }

    #[test]
    fn iqm_matches_trimmed_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let v: Vec<f64> = (0..1000).map(|_| rng.random_range(-50.0..50.0)).collect();
        let mut s = v.clone();
        s.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let kept = &s[250..750];
        let oracle = kept.iter().sum::<f64>() / 500.0;
        assert!((iqm(&v).unwrap() - oracle).abs() < 1e-12);
    }

    fn table(seed: u64, tasks: usize, seeds: usize) -> ScoreTable {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut t = ScoreTable::new();
        for a in ["x", "y"] {
            for k in 0..tasks {
                for s in 0..seeds {
                    // coarse values so ties occur
                    t.insert(a, &format!("t{k}"), s as u64, (rng.random_range(0..6) as f64) * 0.5);
                }
            }
        }
        t
    }

    #[test]
    fn poi_degenerate_cases() {
        let mut t = ScoreTable::new();
        for s in 0..3 {
            t.insert("x", "a", s, 10.0 + s as f64);
            t.insert("y", "a", s, s as f64);
            t.insert("x", "b", s, 5.0);
            t.insert("y", "b", s, 1.0);
        }
        assert_eq!(probability_of_improvement(&t, "x", "y").unwrap(), 1.0);
        assert_eq!(probability_of_improvement(&t, "x", "x").unwrap(), 0.5);
    }

    #[test]
    fn poi_matches_pair_count() {
        let t = table(2, 3, 5);
        let mut total = 0.0;
        for k in 0..3 {
            let xs = t.runs("x", &format!("t{k}")).unwrap();
            let ys = t.runs("y", &format!("t{k}")).unwrap();
            let mut count = 0.0;
            for a in &xs {
                for b in &ys {
                    count += if a > b { 1.0 } else if a == b { 0.5 } else { 0.0 };
                }
            }
            total += count / 25.0;
        }
        assert_eq!(probability_of_improvement(&t, "x", "y").unwrap(), total / 3.0);
    }

    #[test]
    fn poi_without_shared_tasks() {
        let mut t = ScoreTable::new();
        t.insert("x", "a", 0, 1.0);
        t.insert("y", "b", 0, 1.0);
        assert!(matches!(probability_of_improvement(&t, "x", "y"), Err(Error::Usage(_))));
    }

    #[test]
    fn bootstrap_zero_variance() {
        let mut t = ScoreTable::new();
        for s in 0..5 {
            t.insert("x", "a", s, 0.7);
            t.insert("x", "b", s, 0.7);
        }
        let mut rng = stream(0, Stream::Bootstrap);
        let ci = bootstrap_ci(&t, |t| iqm_pooled(t, "x"), 500, 0.95, &mut rng).unwrap();
        for v in [ci.low, ci.high, ci.point] {
            assert!((v - 0.7).abs() < 1e-12);
        }
        assert_eq!(ci.low, ci.high);
    }

    #[test]
    fn bootstrap_zero_confidence_is_median() {
        let t = table(3, 2, 7);
        let stat = |t: &ScoreTable| iqm_pooled(t, "x");
        let ci = bootstrap_ci(&t, stat, 501, 0.0, &mut stream(4, Stream::Bootstrap)).unwrap();
        assert_eq!(ci.low, ci.high);
        let mut rng = stream(4, Stream::Bootstrap);
        let mut draws = Vec::new();
        for _ in 0..501 {
            let mut r = ScoreTable::new();
            for (a, tasks) in &t.scores {
                for (task, runs) in tasks {
                    for i in 0..runs.len() {
                        r.insert(a, task, i as u64, runs[rng.random_range(0..runs.len())].1);
                    }
                }
            }
            draws.push(stat(&r).unwrap());
        }
        draws.sort_by(f64::total_cmp);
        assert_eq!(ci.low, draws[250]);
    }

    #[test]
    fn bootstrap_is_stable_across_seeds() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut t = ScoreTable::new();
        for k in 0..2 {
            for s in 0..20 {
                t.insert("x", &format!("t{k}"), s, rng.random_range(0.0..1.0) + k as f64);
            }
        }
        let stat = |t: &ScoreTable| iqm_pooled(t, "x");
        let a = bootstrap_ci(&t, stat, 2000, 0.95, &mut stream(1, Stream::Bootstrap)).unwrap();
        let b = bootstrap_ci(&t, stat, 2000, 0.95, &mut stream(2, Stream::Bootstrap)).unwrap();
        let width = a.high - a.low;
        assert!((a.low - b.low).abs() < 0.05 * width);
        assert!((a.high - b.high).abs() < 0.05 * width);
        assert!(a.low <= a.point && a.point <= a.high);
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("scores.csv");
        let t = table(6, 2, 3);
        t.write_csv(&p).unwrap();
        assert_eq!(ScoreTable::read_csv(&p).unwrap(), t);
        let text = std::fs::read_to_string(&p).unwrap();
        assert!(text.starts_with("algorithm,task,seed,score\n"));
    }

    #[test]
    fn baselines_and_missing_task() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("b.csv");
        std::fs::write(&p, "task,random_score,human_score\nt0,0,2\n").unwrap();
        let b = read_baselines(&p).unwrap();
        let t = table(7, 2, 2);
        let err = t.normalized(&b).unwrap_err();
        assert!(err.to_string().contains("t1"));
        std::fs::write(&p, "task,ppo_mean\nt0,2\nt1,4\n").unwrap();
        let b = read_baselines(&p).unwrap();
        let n = t.normalized(&b).unwrap();
        assert_eq!(n.runs("x", "t1").unwrap()[0], t.runs("x", "t1").unwrap()[0] / 4.0);
    }

    proptest! {
        #[test]
        fn poi_is_complementary(seed in 0u64..500) {
            let t = table(seed, 3, 4);
            let a = probability_of_improvement(&t, "x", "y").unwrap();
            let b = probability_of_improvement(&t, "y", "x").unwrap();
            prop_assert_eq!(a + b, 1.0);
        }

        #[test]
        fn poi_invariant_under_monotone_transform(seed in 0u64..500) {
            let t = table(seed, 1, 6);
            let mut u = ScoreTable::new();
            for r in t.rows() {
                u.insert(&r.algorithm, &r.task, r.seed, (r.score * 3.0).exp() - 7.0);
            }
            prop_assert_eq!(
                probability_of_improvement(&t, "x", "y").unwrap(),
                probability_of_improvement(&u, "x", "y").unwrap()
            );
        }

        #[test]
        fn iqm_permutation_invariant_and_monotone(
            v in prop::collection::vec(-100.0f64..100.0, 1..40),
            bump in 0.0f64..50.0,
            idx in 0usize..40,
        ) {
            let base = iqm(&v).unwrap();
            let mut r = v.clone();
            r.reverse();
            prop_assert!((iqm(&r).unwrap() - base).abs() < 1e-9);
            let mut w = v.clone();
            let i = idx % w.len();
            w[i] += bump;
            prop_assert!(iqm(&w).unwrap() >= base - 1e-9);
        }

        #[test]
        fn normalization_is_affine_identity(random in -1e3f64..1e3, gap in 1e-3f64..1e3) {
            let human = random + gap;
            prop_assert_eq!(normalized_score(human, random, human).unwrap(), 1.0);
            prop_assert_eq!(normalized_score(random, random, human).unwrap(), 0.0);
        }
    }
}
