use std::io::{BufRead, BufReader, Read, Write};

use super::features::FEATURE_COUNT;
use super::model::{ConfusionMatrix, SoftmaxModel, Standardizer, TrainMeta, CLASS_COUNT, PARAMS};
use super::ClassifierError;
use crate::tactile::ShapeClass;

/// Model CSV: an optional `#` metadata line, `mean` and `std` rows, then one
/// `label,bias,w1..w10` row per class.
pub fn write_model<W: Write>(mut w: W, model: &SoftmaxModel) -> Result<(), ClassifierError> {
    if let Some(m) = &model.meta {
        let losses: Vec<String> = m.epoch_losses.iter().map(|l| l.to_string()).collect();
        writeln!(
            w,
            "# epochs={} batch={} lr={} seed={} initial_loss={} final_loss={} epoch_losses={}",
            m.epochs,
            m.batch,
            m.learning_rate,
            m.seed,
            m.initial_loss,
            m.final_loss(),
            losses.join(";")
        )?;
    }
    let row = |name: &str, vals: &[f64]| {
        let mut s = name.to_string();
        for v in vals {
            s.push(',');
            s.push_str(&v.to_string());
        }
        s
    };
    writeln!(w, "{}", row("mean", &model.standardizer.mean))?;
    writeln!(w, "{}", row("std", &model.standardizer.std))?;
    for (k, c) in ShapeClass::ALL.iter().enumerate() {
        writeln!(w, "{}", row(c.name(), &model.weights[k]))?;
    }
    Ok(())
}

fn bad(line: usize, msg: impl Into<String>) -> ClassifierError {
    ClassifierError::Format { line, message: msg.into() }
}

fn parse_meta(line: usize, text: &str) -> Result<TrainMeta, ClassifierError> {
    let mut meta = TrainMeta { epochs: 0, batch: 0, learning_rate: 0.0, seed: 0, initial_loss: f64::NAN, epoch_losses: vec![] };
    for tok in text.split_whitespace() {
        let (k, v) = tok.split_once('=').ok_or_else(|| bad(line, format!("bad metadata token `{tok}`")))?;
        let num = |v: &str| v.parse::<f64>().map_err(|_| bad(line, format!("bad value for {k}")));
        let int = |v: &str| v.parse::<u64>().map_err(|_| bad(line, format!("bad value for {k}")));
        match k {
            "epochs" => meta.epochs = int(v)? as usize,
            "batch" => meta.batch = int(v)? as usize,
            "lr" => meta.learning_rate = num(v)?,
            "seed" => meta.seed = int(v)?,
            "initial_loss" => meta.initial_loss = num(v)?,
            "final_loss" => {}
            "epoch_losses" => {
                meta.epoch_losses = v.split(';').filter(|s| !s.is_empty()).map(num).collect::<Result<_, _>>()?
            }
            _ => return Err(bad(line, format!("unknown metadata key `{k}`"))),
        }
    }
    Ok(meta)
}

pub fn read_model<R: Read>(r: R) -> Result<SoftmaxModel, ClassifierError> {
    let mut meta = None;
    let mut rows: Vec<(usize, Vec<String>)> = Vec::new();
    for (i, line) in BufReader::new(r).lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        if let Some(rest) = t.strip_prefix('#') {
            meta = Some(parse_meta(i + 1, rest)?);
            continue;
        }
        rows.push((i + 1, t.split(',').map(|s| s.trim().to_string()).collect()));
    }
    if rows.len() != 2 + CLASS_COUNT {
        return Err(bad(0, format!("expected {} rows, found {}", 2 + CLASS_COUNT, rows.len())));
    }
    let values = |(line, cells): &(usize, Vec<String>), name: Option<&str>, n: usize| -> Result<Vec<f64>, ClassifierError> {
        if let Some(name) = name {
            if cells[0] != name {
                return Err(bad(*line, format!("expected `{name}` row, found `{}`", cells[0])));
            }
        }
        if cells.len() != n + 1 {
            return Err(bad(*line, format!("expected {} values, found {}", n, cells.len() - 1)));
        }
        cells[1..].iter().map(|c| c.parse::<f64>().map_err(|_| bad(*line, format!("bad number `{c}`")))).collect()
    };
    let mean = values(&rows[0], Some("mean"), FEATURE_COUNT)?;
    let std = values(&rows[1], Some("std"), FEATURE_COUNT)?;
    let mut model = SoftmaxModel::zeros(Standardizer {
        mean: mean.try_into().expect("length checked"),
        std: std.try_into().expect("length checked"),
    });
    let mut seen = [false; CLASS_COUNT];
    for row in &rows[2..] {
        let class: ShapeClass =
            row.1[0].parse().map_err(|_| bad(row.0, format!("unknown class `{}`", row.1[0])))?;
        if seen[class.index()] {
            return Err(bad(row.0, format!("duplicate class `{class}`")));
        }
        seen[class.index()] = true;
        let w = values(row, None, PARAMS)?;
        model.weights[class.index()].copy_from_slice(&w);
    }
    if !model.is_finite() {
        return Err(bad(0, "non-finite weight"));
    }
    model.meta = meta;
    Ok(model)
}

pub fn write_confusion<W: Write>(mut w: W, cm: &ConfusionMatrix) -> Result<(), ClassifierError> {
    let names = ShapeClass::ALL.map(|c| c.name());
    writeln!(w, "truth\\predicted,{}", names.join(","))?;
    for (k, name) in names.iter().enumerate() {
        let cells: Vec<String> = cm.counts[k].iter().map(|c| c.to_string()).collect();
        writeln!(w, "{},{}", name, cells.join(","))?;
    }
    Ok(())
}
