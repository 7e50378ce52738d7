//! On-disk formats.
//!
//! Floats in CSV files are written with 17 significant digits (`{:.16e}`),
//! which round-trips every `f64` exactly. Binary matrices are little-endian:
//! a header of `u64` fields followed by column-major `f64` pairs `(re, im)`.

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};
use ura_core::codebook::Codebook;
use ura_core::detector::IterationRecord;
use ura_core::linalg::CMatrix;
use ura_core::sim::{ErrorReport, SweepPoint};
use ura_core::tree_code::Message;
use ura_core::Complex64;

pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn parse_f64(s: &str) -> Result<f64> {
    s.trim().parse().with_context(|| format!("`{s}` is not a number"))
}

/// Writes a header and rows with the `csv` crate, `\n` line endings.
pub fn write_csv(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .with_context(|| format!("cannot create {}", path.display()))?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Header and rows of a CSV document.
pub fn read_csv(text: &str) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let mut r = csv::ReaderBuilder::new().from_reader(text.as_bytes());
    let header = r.headers()?.iter().map(str::to_string).collect();
    let rows = r
        .records()
        .map(|rec| Ok(rec?.iter().map(str::to_string).collect()))
        .collect::<Result<Vec<Vec<String>>>>()?;
    Ok((header, rows))
}

pub const SWEEP_HEADER: [&str; 5] = ["snr_db", "m", "p_md", "p_fa", "p_e"];

pub fn sweep_rows(points: &[SweepPoint]) -> Vec<Vec<String>> {
    points
        .iter()
        .map(|p| vec![fmt_f64(p.snr_db), p.m.to_string(), fmt_f64(p.p_md), fmt_f64(p.p_fa), fmt_f64(p.p_e)])
        .collect()
}

pub const TRIALS_HEADER: [&str; 7] = ["trial", "p_md", "p_fa", "p_e", "decoded", "decoder_overflows", "detector_failures"];

pub fn trial_rows(reports: &[ErrorReport]) -> Vec<Vec<String>> {
    reports
        .iter()
        .map(|r| {
            vec![
                r.trial.to_string(),
                fmt_f64(r.p_md),
                fmt_f64(r.p_fa),
                fmt_f64(r.p_e),
                r.decoded.to_string(),
                r.decoder_overflows.to_string(),
                r.detector_failures.to_string(),
            ]
        })
        .collect()
}

pub const SLOTS_HEADER: [&str; 6] = ["trial", "slot", "list_size", "sent", "missed", "false_chunks"];

pub fn slot_rows(reports: &[ErrorReport]) -> Vec<Vec<String>> {
    reports
        .iter()
        .flat_map(|r| {
            r.slots.iter().enumerate().map(move |(s, st)| {
                vec![
                    r.trial.to_string(),
                    s.to_string(),
                    st.list_size.to_string(),
                    st.sent.to_string(),
                    st.missed.to_string(),
                    st.false_chunks.to_string(),
                ]
            })
        })
        .collect()
}

pub const TRACE_HEADER: [&str; 6] = ["iteration", "coordinate", "d", "reward", "f", "e_gamma"];

/// `e_gamma` is left empty when the truth was not known.
pub fn trace_rows(records: &[IterationRecord]) -> Vec<Vec<String>> {
    records
        .iter()
        .map(|r| {
            vec![
                r.iteration.to_string(),
                r.coordinate.to_string(),
                fmt_f64(r.step),
                fmt_f64(r.reward),
                fmt_f64(r.cost),
                r.e_gamma.map(fmt_f64).unwrap_or_default(),
            ]
        })
        .collect()
}

pub fn parse_trace(text: &str) -> Result<Vec<IterationRecord>> {
    let (header, rows) = read_csv(text)?;
    if header != TRACE_HEADER {
        bail!("unexpected trace header {header:?}");
    }
    rows.iter()
        .map(|r| {
            Ok(IterationRecord {
                iteration: r[0].parse()?,
                coordinate: r[1].parse()?,
                step: parse_f64(&r[2])?,
                reward: parse_f64(&r[3])?,
                cost: parse_f64(&r[4])?,
                e_gamma: if r[5].is_empty() { None } else { Some(parse_f64(&r[5])?) },
            })
        })
        .collect()
}

fn write_u64(w: &mut impl Write, x: u64) -> io::Result<()> {
    w.write_all(&x.to_le_bytes())
}

fn read_u64(r: &mut impl Read) -> io::Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn write_payload(w: &mut impl Write, m: &CMatrix) -> io::Result<()> {
    for z in m.as_slice() {
        w.write_all(&z.re.to_le_bytes())?;
        w.write_all(&z.im.to_le_bytes())?;
    }
    Ok(())
}

fn read_payload(r: &mut impl Read, rows: usize, cols: usize) -> io::Result<CMatrix> {
    let mut data = Vec::with_capacity(rows * cols);
    let mut b = [0u8; 16];
    for _ in 0..rows * cols {
        r.read_exact(&mut b)?;
        let re = f64::from_le_bytes(b[..8].try_into().expect("8 bytes"));
        let im = f64::from_le_bytes(b[8..].try_into().expect("8 bytes"));
        data.push(Complex64::new(re, im));
    }
    Ok(CMatrix::from_vec(rows, cols, data))
}

/// Header `d, n_cw, seed` as `u64`, then one `normalized` byte, then the payload.
pub fn write_codebook(w: &mut impl Write, cb: &Codebook) -> io::Result<()> {
    write_u64(w, cb.dim() as u64)?;
    write_u64(w, cb.len() as u64)?;
    write_u64(w, cb.seed())?;
    w.write_all(&[cb.normalized() as u8])?;
    write_payload(w, cb.matrix())
}

pub fn read_codebook(r: &mut impl Read) -> Result<Codebook> {
    let d = read_u64(r)? as usize;
    let n = read_u64(r)? as usize;
    let seed = read_u64(r)?;
    let mut flag = [0u8; 1];
    r.read_exact(&mut flag)?;
    if flag[0] > 1 {
        bail!("bad normalized flag {}", flag[0]);
    }
    let a = read_payload(r, d, n)?;
    if r.read(&mut [0u8; 1])? != 0 {
        bail!("trailing bytes after codebook payload");
    }
    Ok(Codebook::from_matrix(a, seed, flag[0] == 1)?)
}

/// Header `rows, cols` as `u64`, then the payload.
pub fn write_matrix(w: &mut impl Write, m: &CMatrix) -> io::Result<()> {
    write_u64(w, m.nrows() as u64)?;
    write_u64(w, m.ncols() as u64)?;
    write_payload(w, m)
}

pub fn read_matrix(r: &mut impl Read) -> Result<CMatrix> {
    let rows = read_u64(r)? as usize;
    let cols = read_u64(r)? as usize;
    Ok(read_payload(r, rows, cols)?)
}

pub fn save_with(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> io::Result<()>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path).with_context(|| format!("cannot create {}", path.display()))?);
    f(&mut w)?;
    w.flush()?;
    Ok(())
}

/// One hex string per line.
pub fn write_messages<'a>(path: &Path, msgs: impl IntoIterator<Item = &'a Message>) -> Result<()> {
    save_with(path, |w| {
        for m in msgs {
            writeln!(w, "{}", m.to_hex())?;
        }
        Ok(())
    })
}

pub fn read_messages(path: &Path, bits: usize) -> Result<Vec<Message>> {
    let f = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    BufReader::new(f)
        .lines()
        .filter(|l| l.as_ref().map_or(true, |l| !l.trim().is_empty()))
        .map(|l| Ok(Message::from_hex(l?.trim(), bits)?))
        .collect()
}
