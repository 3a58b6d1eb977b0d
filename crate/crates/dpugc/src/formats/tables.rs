use std::path::Path;

use dpugc_core::dp::TrainingLog;
use dpugc_core::eval::EvalReport;
use dpugc_core::personalized::{Budget, BudgetLedger};
use dpugc_core::utility::RegressionRow;

use crate::error::{AppError, AppResult};

/// Shortest round-trip decimal; scientific notation outside `[1e-4, 1e15)`.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else if x == 0.0 || (1e-4..1e15).contains(&x.abs()) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

fn to_csv<I>(header: &[&str], rows: I) -> String
where
    I: IntoIterator<Item = Vec<String>>,
{
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(header).unwrap();
    for r in rows {
        w.write_record(&r).unwrap();
    }
    String::from_utf8(w.into_inner().unwrap()).unwrap()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LogFlavor {
    Global,
    /// Adds the number of examples still eligible at each step.
    Personalized,
}

pub fn training_log_csv(log: &TrainingLog, flavor: LogFlavor) -> String {
    let mut header = vec!["step", "loss", "epsilon", "delta", "lot_size"];
    if flavor == LogFlavor::Personalized {
        header.push("valid_examples");
    }
    to_csv(
        &header,
        log.records.iter().map(|r| {
            let mut row =
                vec![r.step.to_string(), opt(r.loss), fmt_f64(r.epsilon), fmt_f64(r.delta), r.lot_size.to_string()];
            if flavor == LogFlavor::Personalized {
                row.push(r.valid_examples.to_string());
            }
            row
        }),
    )
}

pub fn spend_csv(ledger: &BudgetLedger) -> String {
    to_csv(
        &["user_id", "epsilon_spent", "delta_spent", "excluded_at_step"],
        ledger.accounts().iter().map(|a| {
            vec![
                a.user_id.clone(),
                fmt_f64(a.spent_epsilon),
                fmt_f64(a.spent_delta),
                a.excluded_at_step.map(|s| s.to_string()).unwrap_or_default(),
            ]
        }),
    )
}

pub fn eval_csv(reports: &[EvalReport]) -> String {
    to_csv(
        &["step", "variant", "map_word", "map_char", "epsilon", "delta"],
        reports.iter().map(|r| {
            vec![
                r.step.to_string(),
                r.variant.clone(),
                fmt_f64(r.scores.map_word),
                fmt_f64(r.scores.map_char),
                opt(r.epsilon),
                opt(r.delta),
            ]
        }),
    )
}

/// Per-query breakdown of an evaluation.
pub fn per_query_csv(reports: &[EvalReport]) -> String {
    to_csv(
        &["step", "variant", "query", "ap_word", "ap_char"],
        reports.iter().flat_map(|r| {
            r.scores.per_query.iter().map(move |q| {
                vec![r.step.to_string(), r.variant.clone(), q.query.clone(), fmt_f64(q.ap_word), fmt_f64(q.ap_char)]
            })
        }),
    )
}

pub fn regression_csv(rows: &[RegressionRow]) -> String {
    to_csv(
        &["step", "baseline_rmse", "dp_rmse", "nonedp_rmse", "epsilon", "delta"],
        rows.iter().map(|r| {
            vec![
                r.step.to_string(),
                fmt_f64(r.baseline_rmse),
                opt(r.dp_rmse),
                opt(r.nonedp_rmse),
                opt(r.epsilon),
                opt(r.delta),
            ]
        }),
    )
}

/// Reads `user_id,epsilon_budget,delta_budget` rows; a leading header row
/// is skipped.
pub fn read_budgets(text: &str, path: &Path) -> AppResult<Vec<(String, Budget)>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .flexible(true)
        .from_reader(text.as_bytes());
    let mut out = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| AppError::parse(path, e))?;
        if i == 0 && rec.get(0) == Some("user_id") {
            continue;
        }
        let line = rec.position().map_or(i + 1, |p| p.line() as usize);
        if rec.len() != 3 {
            return Err(AppError::parse(path, format!("line {line}: expected user_id,epsilon_budget,delta_budget")));
        }
        let num = |s: &str| {
            s.parse::<f64>().map_err(|_| AppError::parse(path, format!("line {line}: {s:?} is not a number")))
        };
        let budget = Budget::new(num(&rec[1])?, num(&rec[2])?)
            .map_err(|e| AppError::parse(path, format!("line {line}: {e}")))?;
        out.push((rec[0].to_string(), budget));
    }
    Ok(out)
}
