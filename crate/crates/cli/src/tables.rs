//! Plot-ready CSV tables derived from a report, one per criterion.

use std::collections::BTreeMap;
use std::path::Path;

use wfock::harness::{Findings, IntegralEstimate, Num, VerificationReport};

use crate::error::CliError;

/// Rows of one table: label, abscissa, value.
struct Table {
    abscissa: &'static str,
    rows: Vec<(String, String, String)>,
}

#[derive(Default)]
pub struct Tables {
    tables: BTreeMap<String, Table>,
}

fn num(v: f64) -> String {
    format!("{}", Num(v))
}

impl Tables {
    fn push(&mut self, name: String, abscissa: &'static str, label: &str, x: String, value: f64) {
        self.tables
            .entry(name)
            .or_insert_with(|| Table {
                abscissa,
                rows: Vec::new(),
            })
            .rows
            .push((label.to_string(), x, num(value)));
    }

    fn series(&mut self, name: &str, abscissa: &'static str, label: &str, xs: &[String], vs: &[Num]) {
        for (x, v) in xs.iter().zip(vs) {
            self.push(name.to_string(), abscissa, label, x.clone(), v.0);
        }
    }

    fn integral(&mut self, name: String, label: &str, e: &IntegralEstimate) {
        for (x, v) in e.extents.iter().zip(&e.partials) {
            self.push(name.clone(), "extent", label, num(*x), v.0);
        }
        self.push(name, "extent", label, "inf".into(), e.total.0);
    }

    pub fn from_report(report: &VerificationReport) -> Self {
        let mut t = Tables::default();
        let ladder: Vec<String> = report.params.analysis.ladder.iter().map(|n| n.to_string()).collect();
        for rec in &report.instances {
            let label = rec.label.as_str();
            let Some(f) = &rec.findings else { continue };
            match f {
                Findings::Boundedness(b) => {
                    let extents: Vec<String> = b.extents.iter().map(|e| num(*e)).collect();
                    t.series("norm", "N", label, &ladder, &b.norms);
                    t.series("berezin_sup", "N", label, &ladder, &b.berezin_sups);
                    t.series("berezin_extent_sup", "extent", label, &extents, &b.berezin_extent_sups);
                    t.series("average_extent_sup", "extent", label, &extents, &b.average_extent_sups);
                    if let Some(s) = &b.secondary {
                        t.series(
                            "average_extent_sup_secondary",
                            "extent",
                            label,
                            &extents,
                            &s.average_extent_sups,
                        );
                    }
                }
                Findings::Compactness(c) => {
                    let outer: Vec<String> = c.rings.iter().skip(1).map(|e| num(*e)).collect();
                    t.series("average_ring_sup", "extent", label, &outer, &c.average_rings);
                    t.series("berezin_ring_sup", "extent", label, &outer, &c.berezin_rings);
                    t.series("tail_eigenvalue", "N", label, &ladder, &c.tail_values);
                }
                Findings::Schatten(s) => {
                    let p = s.p;
                    t.series(&format!("schatten_sum_p={p}"), "N", label, &ladder, &s.raw_sums);
                    t.integral(format!("berezin_lp_p={p}"), label, &s.berezin);
                    t.integral(format!("average_lp_p={p}"), label, &s.average);
                }
                Findings::Gauge(g) => {
                    let op = &rec.operation;
                    t.series(&format!("{op}_sum"), "N", label, &ladder, &g.raw_sums);
                    t.integral(format!("{op}_berezin"), label, &g.berezin);
                    t.integral(format!("{op}_average"), label, &g.average);
                }
                Findings::Volterra(v) => {
                    let op = &rec.operation;
                    t.series(&format!("{op}_sum"), "N", label, &ladder, &v.spectral_sums);
                    t.series(&format!("{op}_trace"), "N", label, &ladder, &v.traces);
                    t.integral(format!("{op}_criterion"), label, &v.criterion);
                }
                Findings::Lemmas(l) => {
                    for c in &l.constants {
                        let xs: Vec<String> = l.resolutions.clone();
                        t.series(&format!("lemma_{}", c.name), "N", label, &xs, &c.values);
                    }
                }
            }
        }
        t
    }

    pub fn write(&self, dir: &Path) -> Result<(), CliError> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Io {
            path: dir.to_path_buf(),
            source: e,
        })?;
        for (name, table) in &self.tables {
            let path = dir.join(format!("{name}.csv"));
            let csv_err = |e| CliError::Csv {
                path: path.clone(),
                source: e,
            };
            let mut w = csv::Writer::from_path(&path).map_err(csv_err)?;
            w.write_record(["label", table.abscissa, "value"]).map_err(csv_err)?;
            for (l, x, v) in &table.rows {
                w.write_record([l, x, v]).map_err(csv_err)?;
            }
            w.flush().map_err(|e| CliError::Io {
                path: path.clone(),
                source: e,
            })?;
        }
        Ok(())
    }
}
