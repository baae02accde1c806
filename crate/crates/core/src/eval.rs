//! Accuracy metrics, error histograms, altitude comparisons, heatmaps and
//! RSRQ quality flags.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::data::{FlightLog, Kpi};
use crate::error::{Error, Result};
use crate::geo::{geodetic_to_enu, GeoPosition};

/// Horizontal gate for pairing samples of two altitude passes.
pub const ALIGNMENT_GATE_M: f64 = 15.0;
/// Minimum aligned pairs for a comparison.
pub const MIN_PAIRS: usize = 10;
/// RSRQ below this is poor.
pub const RSRQ_POOR_DB: f64 = -15.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub n: usize,
    pub mae_db: f64,
    pub rmse_db: f64,
    pub mape_pct: f64,
    /// `None` when the measured values have zero variance.
    pub r2: Option<f64>,
}

/// Accuracy of `predicted` against `measured`, with error `measured - predicted`.
/// MAPE divides by the dBm magnitude of each measurement.
pub fn metrics(measured: &[f64], predicted: &[f64]) -> Result<EvalReport> {
    if measured.len() != predicted.len() {
        return Err(Error::LengthMismatch {
            left: measured.len(),
            right: predicted.len(),
        });
    }
    if measured.is_empty() {
        return Err(Error::domain("metrics need at least one sample"));
    }
    if measured.contains(&0.0) {
        return Err(Error::domain("MAPE undefined for a measured value of 0"));
    }
    let n = measured.len() as f64;
    let mut abs = 0.0;
    let mut sq = 0.0;
    let mut pct = 0.0;
    for (m, p) in measured.iter().zip(predicted) {
        let e = m - p;
        abs += e.abs();
        sq += e * e;
        pct += e.abs() / m.abs();
    }
    let mean = measured.iter().sum::<f64>() / n;
    let sst: f64 = measured.iter().map(|m| (m - mean).powi(2)).sum();
    Ok(EvalReport {
        n: measured.len(),
        mae_db: abs / n,
        rmse_db: (sq / n).sqrt(),
        mape_pct: 100.0 * pct / n,
        r2: (sst > 0.0).then(|| 1.0 - sq / sst),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorHistogram {
    pub bin_width_db: f64,
    /// `counts.len() + 1` edges.
    pub bin_edges: Vec<f64>,
    pub counts: Vec<usize>,
    pub fitted_mean_db: f64,
    /// Sample standard deviation (n - 1 denominator), 0 for a single sample.
    pub fitted_std_db: f64,
}

/// Fixed-width histogram with edges on multiples of `bin_width`, plus a
/// moment-matched normal fit.
pub fn error_histogram(errors: &[f64], bin_width: f64) -> Result<ErrorHistogram> {
    if errors.is_empty() {
        return Err(Error::domain("histogram needs at least one error"));
    }
    if !(bin_width > 0.0) {
        return Err(Error::domain("bin width must be positive"));
    }
    if errors.iter().any(|e| !e.is_finite()) {
        return Err(Error::domain("non-finite prediction error"));
    }
    let min = errors.iter().copied().fold(f64::INFINITY, f64::min);
    let max = errors.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = (min / bin_width).floor() * bin_width;
    let n_bins = ((max - lo) / bin_width).floor() as usize + 1;
    let mut counts = vec![0usize; n_bins];
    for e in errors {
        let b = (((e - lo) / bin_width).floor() as usize).min(n_bins - 1);
        counts[b] += 1;
    }
    let n = errors.len() as f64;
    let mean = errors.iter().sum::<f64>() / n;
    let std = if errors.len() > 1 {
        (errors.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    Ok(ErrorHistogram {
        bin_width_db: bin_width,
        bin_edges: (0..=n_bins).map(|i| lo + i as f64 * bin_width).collect(),
        counts,
        fitted_mean_db: mean,
        fitted_std_db: std,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Alignment {
    /// Nearest horizontal position within the gate.
    Spatial,
    /// Nearest fraction of elapsed flight time.
    ElapsedTime,
}

/// Statistics of `low - high` over aligned pairs of two altitude passes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AltitudeComparison {
    pub kpi: Kpi,
    pub alignment: Alignment,
    pub n_pairs: usize,
    pub mean_diff: f64,
    pub std_diff: f64,
    /// Percent of pairs where the lower pass reads strictly higher.
    pub pct_greater: f64,
    /// Percent of exactly equal pairs; integer KPIs only.
    pub pct_equal: Option<f64>,
}

struct Sample {
    t: f64,
    east: f64,
    north: f64,
    value: f64,
}

fn samples(log: &FlightLog, kpi: Kpi, origin: &GeoPosition) -> Vec<Sample> {
    log.records
        .iter()
        .filter_map(|r| {
            let value = r.kpi(kpi)?;
            let flat = GeoPosition {
                altitude_m: origin.altitude_m,
                ..r.position
            };
            let enu = geodetic_to_enu(&flat, origin);
            Some(Sample {
                t: r.timestamp_s,
                east: enu.east,
                north: enu.north,
                value,
            })
        })
        .collect()
}

fn spatial_pairs(low: &[Sample], high: &[Sample]) -> Vec<(f64, f64)> {
    low.iter()
        .filter_map(|a| {
            let (best, d2) = high
                .iter()
                .map(|b| (b, (a.east - b.east).powi(2) + (a.north - b.north).powi(2)))
                .min_by(|x, y| x.1.total_cmp(&y.1))?;
            (d2 <= ALIGNMENT_GATE_M * ALIGNMENT_GATE_M).then_some((a.value, best.value))
        })
        .collect()
}

fn elapsed(s: &[Sample]) -> Vec<f64> {
    let t0 = s.iter().map(|x| x.t).fold(f64::INFINITY, f64::min);
    let t1 = s.iter().map(|x| x.t).fold(f64::NEG_INFINITY, f64::max);
    let span = t1 - t0;
    s.iter()
        .map(|x| if span > 0.0 { (x.t - t0) / span } else { 0.0 })
        .collect()
}

fn time_pairs(low: &[Sample], high: &[Sample]) -> Vec<(f64, f64)> {
    let ul = elapsed(low);
    let uh = elapsed(high);
    low.iter()
        .zip(&ul)
        .filter_map(|(a, u)| {
            let j = (0..high.len()).min_by(|&i, &k| (uh[i] - u).abs().total_cmp(&(uh[k] - u).abs()))?;
            Some((a.value, high[j].value))
        })
        .collect()
}

/// Pairs each sample of `log_low` with one of `log_high` and summarises the
/// difference `low - high`. Spatial matching is tried first; if it pairs fewer
/// than half of the low-altitude samples or fewer than [`MIN_PAIRS`], samples
/// are paired by elapsed-time fraction instead.
pub fn compare_altitudes(log_low: &FlightLog, log_high: &FlightLog, kpi: Kpi) -> Result<AltitudeComparison> {
    let origin = log_low
        .records
        .first()
        .or(log_high.records.first())
        .map(|r| r.position)
        .ok_or(Error::NoOverlap { pairs: 0 })?;
    let low = samples(log_low, kpi, &origin);
    let high = samples(log_high, kpi, &origin);
    if low.is_empty() || high.is_empty() {
        return Err(Error::MissingColumn(kpi.column().into()));
    }
    let mut alignment = Alignment::Spatial;
    let mut pairs = spatial_pairs(&low, &high);
    if pairs.len() * 2 < low.len() || pairs.len() < MIN_PAIRS {
        alignment = Alignment::ElapsedTime;
        pairs = time_pairs(&low, &high);
    }
    if pairs.len() < MIN_PAIRS {
        return Err(Error::NoOverlap { pairs: pairs.len() });
    }
    let n = pairs.len() as f64;
    let diffs: Vec<f64> = pairs.iter().map(|(a, b)| a - b).collect();
    let mean = diffs.iter().sum::<f64>() / n;
    let std = (diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    let pct = |pred: &dyn Fn(&(f64, f64)) -> bool| 100.0 * pairs.iter().filter(|p| pred(p)).count() as f64 / n;
    Ok(AltitudeComparison {
        kpi,
        alignment,
        n_pairs: pairs.len(),
        mean_diff: mean,
        std_diff: std,
        pct_greater: pct(&|(a, b)| a > b),
        pct_equal: kpi.is_integer().then(|| pct(&|(a, b)| a == b)),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeatmapCell {
    pub ix: i64,
    pub iy: i64,
    /// Bin centre.
    pub east_m: f64,
    pub north_m: f64,
    pub count: usize,
    pub mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeatmapGrid {
    pub kpi: Kpi,
    pub bin_m: f64,
    pub origin: GeoPosition,
    /// Populated bins ordered by `(ix, iy)`.
    pub cells: Vec<HeatmapCell>,
}

impl HeatmapGrid {
    pub fn total_count(&self) -> usize {
        self.cells.iter().map(|c| c.count).sum()
    }

    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["east_m", "north_m", "value"])?;
        for c in &self.cells {
            out.write_record([c.east_m.to_string(), c.north_m.to_string(), c.mean.to_string()])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Mean KPI per square bin of the local east/north plane. Bin `(ix, iy)`
/// covers `[ix*bin, (ix+1)*bin) x [iy*bin, (iy+1)*bin)`. The origin defaults
/// to the first record's position.
pub fn heatmap(log: &FlightLog, kpi: Kpi, bin_m: f64, origin: Option<GeoPosition>) -> Result<HeatmapGrid> {
    if !(bin_m > 0.0) {
        return Err(Error::domain("bin size must be positive"));
    }
    let origin = origin
        .or(log.records.first().map(|r| r.position))
        .ok_or_else(|| Error::domain("heatmap of an empty log"))?;
    let mut bins: BTreeMap<(i64, i64), (usize, f64)> = BTreeMap::new();
    for r in &log.records {
        let Some(v) = r.kpi(kpi) else { continue };
        let enu = geodetic_to_enu(&r.position, &origin);
        let key = ((enu.east / bin_m).floor() as i64, (enu.north / bin_m).floor() as i64);
        let e = bins.entry(key).or_insert((0, 0.0));
        e.0 += 1;
        e.1 += v;
    }
    if bins.is_empty() {
        return Err(Error::MissingColumn(kpi.column().into()));
    }
    let cells = bins
        .into_iter()
        .map(|((ix, iy), (count, sum))| HeatmapCell {
            ix,
            iy,
            east_m: (ix as f64 + 0.5) * bin_m,
            north_m: (iy as f64 + 0.5) * bin_m,
            count,
            mean: sum / count as f64,
        })
        .collect();
    Ok(HeatmapGrid {
        kpi,
        bin_m,
        origin,
        cells,
    })
}

/// `(timestamp, poor)` per record; rows without RSRQ are not flagged.
pub fn rsrq_poor_flags(log: &FlightLog) -> Result<Vec<(f64, bool)>> {
    if !log.has_kpi(Kpi::Rsrq) {
        return Err(Error::MissingColumn(Kpi::Rsrq.column().into()));
    }
    Ok(log
        .records
        .iter()
        .map(|r| (r.timestamp_s, r.rsrq_db.is_some_and(|q| q < RSRQ_POOR_DB)))
        .collect())
}

/// Row of an accuracy table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyRow {
    pub device: String,
    pub model: String,
    pub report: EvalReport,
}

fn render(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut width: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for r in rows {
        for (w, c) in width.iter_mut().zip(r) {
            *w = (*w).max(c.len());
        }
    }
    let line = |cells: &[String]| {
        let mut s = String::new();
        for (i, (c, w)) in cells.iter().zip(&width).enumerate() {
            if i == 0 {
                let _ = write!(s, "{c:<w$}");
            } else {
                let _ = write!(s, "  {c:>w$}");
            }
        }
        s.trim_end().to_string()
    };
    let head: Vec<String> = header.iter().map(|h| h.to_string()).collect();
    let mut out = line(&head);
    out.push('\n');
    out.push_str(&"-".repeat(width.iter().sum::<usize>() + 2 * (width.len() - 1)));
    out.push('\n');
    for r in rows {
        out.push_str(&line(r));
        out.push('\n');
    }
    out
}

/// Aligned text table: device, model, MAE, RMSE, MAPE, R².
pub fn accuracy_table(rows: &[AccuracyRow]) -> String {
    let body: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.device.clone(),
                r.model.clone(),
                format!("{:.2}", r.report.mae_db),
                format!("{:.2}", r.report.rmse_db),
                format!("{:.2}", r.report.mape_pct),
                r.report.r2.map_or("n/a".into(), |v| format!("{v:.2}")),
            ]
        })
        .collect();
    render(&["Device", "Model", "MAE (dB)", "RMSE (dB)", "MAPE (%)", "R2"], &body)
}

/// Aligned text table of altitude comparisons, one KPI per row.
pub fn altitude_table(rows: &[AltitudeComparison]) -> String {
    let body: Vec<Vec<String>> = rows
        .iter()
        .map(|c| {
            let unit = c.kpi.unit();
            let with_unit = |v: f64| if unit.is_empty() { format!("{v:.2}") } else { format!("{v:.2} {unit}") };
            vec![
                c.kpi.column().to_string(),
                with_unit(c.mean_diff),
                with_unit(c.std_diff),
                format!("{:.2}%", c.pct_greater),
                c.pct_equal.map_or("-".into(), |p| format!("{p:.2}%")),
            ]
        })
        .collect();
    render(&["KPI", "mean(low-high)", "std", "low>high", "equal"], &body)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::KpiRecord;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    #[test]
    fn perfect_prediction() {
        let m = [-80.0, -95.5, -101.0];
        let r = metrics(&m, &m).unwrap();
        assert_eq!((r.mae_db, r.rmse_db, r.mape_pct, r.r2), (0.0, 0.0, 0.0, Some(1.0)));
    }

    #[test]
    fn constant_measured_has_no_r2() {
        let r = metrics(&[-100.0, -100.0], &[-97.0, -103.0]).unwrap();
        assert_eq!(r.mae_db, 3.0);
        assert_eq!(r.rmse_db, 3.0);
        assert!((r.mape_pct - 3.0).abs() < 1e-12);
        assert_eq!(r.r2, None);
    }

    #[test]
    fn metric_errors() {
        assert!(matches!(metrics(&[1.0], &[1.0, 2.0]), Err(Error::LengthMismatch { left: 1, right: 2 })));
        assert!(metrics(&[0.0, -1.0], &[1.0, 2.0]).is_err());
        assert!(metrics(&[], &[]).is_err());
    }

    #[test]
    fn mean_predictor_has_zero_r2() {
        let m = [-80.0, -90.0, -100.0, -70.0];
        let mean = m.iter().sum::<f64>() / 4.0;
        assert_eq!(metrics(&m, &[mean; 4]).unwrap().r2, Some(0.0));
    }

    proptest! {
        #[test]
        fn mae_never_exceeds_rmse(v in prop::collection::vec((-140.0f64..-40.0, -140.0f64..-40.0), 1..60)) {
            let (m, p): (Vec<f64>, Vec<f64>) = v.into_iter().unzip();
            let r = metrics(&m, &p).unwrap();
            prop_assert!(r.mae_db <= r.rmse_db + 1e-12);
            if let Some(r2) = r.r2 { prop_assert!(r2 <= 1.0); }
        }

        #[test]
        fn r2_shift_invariant(v in prop::collection::vec((-140.0f64..-40.0, -140.0f64..-40.0), 3..40), c in -20.0f64..20.0) {
            let (m, p): (Vec<f64>, Vec<f64>) = v.into_iter().unzip();
            let ms: Vec<f64> = m.iter().map(|x| x + c).collect();
            let ps: Vec<f64> = p.iter().map(|x| x + c).collect();
            if let (Some(a), Some(b)) = (metrics(&m, &p).unwrap().r2, metrics(&ms, &ps).unwrap().r2) {
                prop_assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0));
            }
        }
    }

    #[test]
    fn histogram_of_zeros() {
        let h = error_histogram(&[0.0; 7], 1.0).unwrap();
        assert_eq!(h.counts, vec![7]);
        assert_eq!(h.bin_edges, vec![0.0, 1.0]);
        assert_eq!((h.fitted_mean_db, h.fitted_std_db), (0.0, 0.0));
    }

    #[test]
    fn histogram_gaussian_fit() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let n = Normal::new(0.0, 5.0).unwrap();
        let e: Vec<f64> = (0..100_000).map(|_| n.sample(&mut rng)).collect();
        let h = error_histogram(&e, 1.0).unwrap();
        assert_eq!(h.counts.iter().sum::<usize>(), e.len());
        assert_eq!(h.bin_edges.len(), h.counts.len() + 1);
        assert!((h.fitted_std_db - 5.0).abs() < 0.1);
        assert!(h.fitted_mean_db.abs() < 0.1);
        for (i, c) in h.counts.iter().enumerate() {
            let (lo, hi) = (h.bin_edges[i], h.bin_edges[i + 1]);
            let oracle = e.iter().filter(|x| **x >= lo && (**x < hi || i + 1 == h.counts.len())).count();
            if i % 7 == 0 {
                assert_eq!(*c, oracle);
            }
        }
    }

    fn origin() -> GeoPosition {
        GeoPosition::new(35.7275, -78.6960, 80.0).unwrap()
    }

    fn pass(alt: f64, rsrp: impl Fn(usize) -> f64) -> FlightLog {
        let o = origin();
        let recs = (0..40)
            .map(|i| {
                let enu = crate::geo::Enu { east: 200.0 + i as f64 * 10.0, north: 50.0, up: alt };
                let mut r = KpiRecord::at(i as f64, crate::geo::enu_to_geodetic(&enu, &o), "S23");
                r.rsrp_dbm = Some(rsrp(i));
                r.rank = Some((i % 4 + 1) as u8);
                r
            })
            .collect();
        FlightLog::from_records(recs)
    }

    #[test]
    fn identical_passes() {
        let a = pass(30.0, |i| -80.0 - i as f64 * 0.5);
        for kpi in [Kpi::Rsrp, Kpi::Rank] {
            let c = compare_altitudes(&a, &a, kpi).unwrap();
            assert_eq!(c.alignment, Alignment::Spatial);
            assert_eq!((c.mean_diff, c.std_diff, c.pct_greater), (0.0, 0.0, 0.0));
            assert_eq!(c.pct_equal, if kpi.is_integer() { Some(100.0) } else { None });
        }
    }

    #[test]
    fn constant_offset() {
        let low = pass(30.0, |i| -80.0 - i as f64 * 0.25);
        let high = pass(50.0, |i| -83.0 - i as f64 * 0.25);
        let c = compare_altitudes(&low, &high, Kpi::Rsrp).unwrap();
        assert_eq!(c.n_pairs, 40);
        assert!((c.mean_diff - 3.0).abs() < 1e-12);
        assert!(c.std_diff < 1e-12);
        assert_eq!(c.pct_greater, 100.0);
    }

    #[test]
    fn far_apart_passes_fall_back_to_time() {
        let low = pass(30.0, |_| -80.0);
        let o = origin();
        let high = FlightLog::from_records(
            low.records
                .iter()
                .map(|r| {
                    let mut enu = geodetic_to_enu(&r.position, &o);
                    enu.north += 500.0;
                    KpiRecord { position: crate::geo::enu_to_geodetic(&enu, &o), rsrp_dbm: Some(-90.0), ..r.clone() }
                })
                .collect(),
        );
        let c = compare_altitudes(&low, &high, Kpi::Rsrp).unwrap();
        assert_eq!(c.alignment, Alignment::ElapsedTime);
        assert_eq!(c.mean_diff, 10.0);
        let short = FlightLog::from_records(low.records[..5].to_vec());
        assert!(matches!(compare_altitudes(&short, &high, Kpi::Rsrp), Err(Error::NoOverlap { pairs: 5 })));
    }

    #[test]
    fn heatmap_single_and_uniform() {
        let one = FlightLog::from_records(vec![KpiRecord { rsrp_dbm: Some(-91.0), ..KpiRecord::at(0.0, origin(), "x") }]);
        let g = heatmap(&one, Kpi::Rsrp, 10.0, None).unwrap();
        assert_eq!(g.cells.len(), 1);
        assert_eq!((g.cells[0].count, g.cells[0].mean), (1, -91.0));

        let u = pass(30.0, |_| -77.0);
        let g = heatmap(&u, Kpi::Rsrp, 25.0, None).unwrap();
        assert_eq!(g.total_count(), u.len());
        assert!(g.cells.iter().all(|c| c.mean == -77.0));
    }

    #[test]
    fn heatmap_matches_grouping_oracle() {
        let log = pass(30.0, |i| -70.0 - ((i * 7) % 13) as f64);
        let o = origin();
        let g = heatmap(&log, Kpi::Rsrp, 35.0, Some(o)).unwrap();
        assert_eq!(g.total_count(), log.len());
        for c in &g.cells {
            let members: Vec<f64> = log
                .records
                .iter()
                .filter(|r| {
                    let e = geodetic_to_enu(&r.position, &o);
                    (e.east / 35.0).floor() as i64 == c.ix && (e.north / 35.0).floor() as i64 == c.iy
                })
                .map(|r| r.rsrp_dbm.unwrap())
                .collect();
            assert_eq!(members.len(), c.count);
            let mean = members.iter().sum::<f64>() / members.len() as f64;
            assert!((mean - c.mean).abs() < 1e-12);
        }
        let mut out = Vec::new();
        g.write_csv(&mut out).unwrap();
        assert!(String::from_utf8(out).unwrap().starts_with("east_m,north_m,value\n"));
    }

    #[test]
    fn rsrq_boundaries() {
        let recs: Vec<KpiRecord> = [Some(-14.9), Some(-15.0), Some(-15.1), None, Some(-20.0), Some(-3.0)]
            .into_iter()
            .enumerate()
            .map(|(i, q)| KpiRecord { rsrq_db: q, ..KpiRecord::at(i as f64, origin(), "x") })
            .collect();
        let flags: Vec<bool> = rsrq_poor_flags(&FlightLog::from_records(recs)).unwrap().into_iter().map(|f| f.1).collect();
        assert_eq!(flags, vec![false, false, true, false, true, false]);
        assert!(matches!(rsrq_poor_flags(&pass(30.0, |_| -80.0)), Err(Error::MissingColumn(_))));
    }

    #[test]
    fn tables_align() {
        let r = metrics(&[-90.0, -100.0], &[-91.0, -98.0]).unwrap();
        let t = accuracy_table(&[
            AccuracyRow { device: "S21".into(), model: "FSPL".into(), report: r.clone() },
            AccuracyRow { device: "S23".into(), model: "Random forest".into(), report: r },
        ]);
        let lines: Vec<&str> = t.lines().collect();
        assert_eq!(lines.len(), 4);
        assert!(lines[2].ends_with("0.90"));
        let a = pass(30.0, |_| -80.0);
        let t = altitude_table(&[compare_altitudes(&a, &a, Kpi::Rank).unwrap()]);
        assert!(t.contains("100.00%"));
    }
}
