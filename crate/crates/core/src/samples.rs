//! Kernel evaluation records and their CSV form.

use std::io::{Read, Write};

use crate::error::{Error, Result};

/// Which kernel a sample belongs to, when a set mixes several.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleKind {
    Oblique,
    ObliqueMinusWhole,
}

impl SampleKind {
    pub fn label(self) -> &'static str {
        match self {
            SampleKind::Oblique => "N",
            SampleKind::ObliqueMinusWhole => "N_minus_Gamma",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "N" => Ok(SampleKind::Oblique),
            "N_minus_Gamma" => Ok(SampleKind::ObliqueMinusWhole),
            other => Err(Error::Parse(format!("unknown sample kind `{other}`"))),
        }
    }
}

/// One value of D_x^α D_y^β (∂_s)^{d_s} K(x, y; t, s) for some kernel K.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelSample {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub t: f64,
    pub s: f64,
    pub alpha: Vec<u32>,
    pub beta: Vec<u32>,
    pub d_s: bool,
    pub value: f64,
    pub kind: Option<SampleKind>,
}

impl KernelSample {
    pub fn elapsed(&self) -> f64 {
        self.t - self.s
    }

    pub fn order(&self) -> u32 {
        self.alpha.iter().sum::<u32>() + self.beta.iter().sum::<u32>()
    }
}

pub fn format_multi_index(a: &[u32]) -> String {
    a.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(":")
}

pub fn parse_multi_index(s: &str) -> Result<Vec<u32>> {
    s.split(':')
        .map(|p| p.trim().parse::<u32>().map_err(|_| Error::Parse(format!("bad multi-index `{s}`"))))
        .collect()
}

/// Writes samples as CSV; every line of `comment` becomes a leading `# ` line.
pub fn write_csv<W: Write>(mut out: W, samples: &[KernelSample], comment: &str) -> Result<()> {
    for line in comment.lines() {
        writeln!(out, "# {line}")?;
    }
    let n = samples.first().map_or(0, |s| s.x.len());
    let with_kind = samples.iter().any(|s| s.kind.is_some());
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = (1..=n).map(|i| format!("x{i}")).collect();
    header.extend((1..=n).map(|i| format!("y{i}")));
    header.extend(["t", "s", "alpha", "beta", "ds", "value"].map(String::from));
    if with_kind {
        header.push("kind".into());
    }
    w.write_record(&header)?;
    for s in samples {
        if s.x.len() != n || s.y.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: s.x.len() });
        }
        let mut rec: Vec<String> = s.x.iter().chain(&s.y).map(|v| v.to_string()).collect();
        rec.push(s.t.to_string());
        rec.push(s.s.to_string());
        rec.push(format_multi_index(&s.alpha));
        rec.push(format_multi_index(&s.beta));
        rec.push(if s.d_s { "1" } else { "0" }.into());
        rec.push(s.value.to_string());
        if with_kind {
            rec.push(s.kind.map_or("", SampleKind::label).into());
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads samples written by [`write_csv`]; `#` lines are skipped.
pub fn read_csv<R: Read>(input: R) -> Result<Vec<KernelSample>> {
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(input);
    let header = r.headers()?.clone();
    let n = header.iter().filter(|h| h.starts_with('x')).count();
    let col = |name: &str| {
        header.iter().position(|h| h == name).ok_or_else(|| Error::Parse(format!("missing column `{name}`")))
    };
    let (ct, cs, ca, cb, cd, cv) = (col("t")?, col("s")?, col("alpha")?, col("beta")?, col("ds")?, col("value")?);
    let ck = header.iter().position(|h| h == "kind");
    let xs: Vec<usize> = (1..=n).map(|i| col(&format!("x{i}"))).collect::<Result<_>>()?;
    let ys: Vec<usize> = (1..=n).map(|i| col(&format!("y{i}"))).collect::<Result<_>>()?;
    let num = |s: &str| s.parse::<f64>().map_err(|_| Error::Parse(format!("bad number `{s}`")));
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let kind = match ck.map(|k| &rec[k]) {
            Some(k) if !k.is_empty() => Some(SampleKind::parse(k)?),
            _ => None,
        };
        out.push(KernelSample {
            x: xs.iter().map(|&i| num(&rec[i])).collect::<Result<_>>()?,
            y: ys.iter().map(|&i| num(&rec[i])).collect::<Result<_>>()?,
            t: num(&rec[ct])?,
            s: num(&rec[cs])?,
            alpha: parse_multi_index(&rec[ca])?,
            beta: parse_multi_index(&rec[cb])?,
            d_s: match &rec[cd] {
                "1" | "true" => true,
                "0" | "false" => false,
                other => return Err(Error::Parse(format!("bad ds flag `{other}`"))),
            },
            value: num(&rec[cv])?,
            kind,
        });
    }
    Ok(out)
}
