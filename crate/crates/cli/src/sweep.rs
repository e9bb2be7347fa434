use seqtag::corpus::Document;
use seqtag::crf::{transition_mask, TransitionMask};
use seqtag::eval::evaluate;
use seqtag::LabelScheme;

use crate::commands::{fit_model, tag_documents};
use crate::config::RunConfig;
use crate::error::CliError;

#[derive(Debug, Clone, Copy)]
pub struct CellScore {
    pub f1: f64,
    pub precision: f64,
    pub recall: f64,
}

/// A learning-rate by weight-decay grid. Rows are weight decays, columns are
/// learning rates; every cell trains from scratch on the train split and is
/// scored on the dev split.
pub struct SweepGrid {
    learning_rates: Vec<f64>,
    weight_decays: Vec<f64>,
    config: RunConfig,
    cells: Vec<Option<CellScore>>,
}

impl SweepGrid {
    pub fn new(
        learning_rates: Vec<f64>,
        weight_decays: Vec<f64>,
        config: RunConfig,
    ) -> Result<Self, CliError> {
        if learning_rates.is_empty() || weight_decays.is_empty() {
            return Err(CliError::input("sweep grid must not be empty"));
        }
        Ok(Self {
            learning_rates,
            weight_decays,
            config,
            cells: Vec::new(),
        })
    }

    /// Fill every cell, returning the number of failed cells. Failures leave
    /// a `NaN` cell and the run continues.
    pub fn run(
        &mut self,
        train_docs: &[Document],
        dev_docs: &[Document],
        scheme: &LabelScheme,
    ) -> usize {
        let mask = transition_mask(scheme);
        let rates = self.learning_rates.clone();
        let decays = self.weight_decays.clone();
        let mut failures = 0;
        self.cells.clear();
        for &wd in &decays {
            for &lr in &rates {
                let mut rc = self.config.clone();
                rc.learning_rate = lr;
                rc.weight_decay = wd;
                match run_cell(&rc, train_docs, dev_docs, scheme, &mask) {
                    Ok(score) => {
                        eprintln!(
                            "cell lr={lr} wd={wd} F1={:.4} P={:.4} R={:.4}",
                            score.f1, score.precision, score.recall
                        );
                        self.cells.push(Some(score));
                    }
                    Err(err) => {
                        eprintln!("warning: cell lr={lr} wd={wd} failed: {err}");
                        self.cells.push(None);
                        failures += 1;
                    }
                }
            }
        }
        failures
    }

    fn cell(&self, row: usize, col: usize) -> &Option<CellScore> {
        &self.cells[row * self.learning_rates.len() + col]
    }

    /// Best cell by micro F1, scanning rows top to bottom and keeping the
    /// first maximum.
    pub fn best(&self) -> Option<(f64, f64, CellScore)> {
        let mut best: Option<(f64, f64, CellScore)> = None;
        for (r, &wd) in self.weight_decays.iter().enumerate() {
            for (c, &lr) in self.learning_rates.iter().enumerate() {
                if let Some(score) = self.cell(r, c) {
                    let better = match &best {
                        Some((_, _, b)) => score.f1 > b.f1,
                        None => true,
                    };
                    if score.f1.is_finite() && better {
                        best = Some((lr, wd, *score));
                    }
                }
            }
        }
        best
    }

    /// Table with one row per weight decay and one column per learning rate,
    /// followed by a `best:` line.
    pub fn render(&self) -> String {
        let corner = "wd\\lr";
        let wd_strs: Vec<String> = self.weight_decays.iter().map(|w| w.to_string()).collect();
        let lr_strs: Vec<String> = self.learning_rates.iter().map(|l| l.to_string()).collect();
        let col0 = wd_strs
            .iter()
            .map(|s| s.len())
            .chain([corner.len()])
            .max()
            .unwrap();
        let widths: Vec<usize> = lr_strs.iter().map(|s| s.len().max(6)).collect();

        let mut out = String::new();
        out.push_str(&format!("{corner:<col0$}"));
        for (s, &w) in lr_strs.iter().zip(&widths) {
            out.push_str(&format!("  {s:>w$}"));
        }
        out.push('\n');
        for (r, wd_s) in wd_strs.iter().enumerate() {
            out.push_str(&format!("{wd_s:<col0$}"));
            for (c, &w) in widths.iter().enumerate() {
                let text = match self.cell(r, c) {
                    Some(score) => format!("{:.4}", score.f1),
                    None => "NaN".to_string(),
                };
                out.push_str(&format!("  {text:>w$}"));
            }
            out.push('\n');
        }
        match self.best() {
            Some((lr, wd, score)) => {
                out.push_str(&format!("best: lr={lr} wd={wd} F1={:.4}\n", score.f1));
            }
            None => out.push_str("best: none\n"),
        }
        out
    }
}

fn run_cell(
    rc: &RunConfig,
    train_docs: &[Document],
    dev_docs: &[Document],
    scheme: &LabelScheme,
    mask: &TransitionMask,
) -> Result<CellScore, CliError> {
    let (model, _) = fit_model(train_docs, scheme, rc, None)?;
    let mut tagged = dev_docs.to_vec();
    tag_documents(&model, &mut tagged, Some(mask))?;
    let report = evaluate(dev_docs, &tagged, scheme)?;
    let micro = report.micro();
    Ok(CellScore {
        f1: micro.f1(),
        precision: micro.precision(),
        recall: micro.recall(),
    })
}
