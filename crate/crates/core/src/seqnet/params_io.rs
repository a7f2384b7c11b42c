//! Versioned binary parameter files (magic, shape table, little-endian
//! 32-bit floats) and UTF-8 alphabet files (one code point per line, the
//! first line being the blank marker).

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};

use super::net::Mat;
use super::{Alphabet, LstmParams, MaxoutParams, SeqNetError, SeqNetParams};

/// "S2LP" as bytes.
const MAGIC: u32 = u32::from_le_bytes(*b"S2LP");
const VERSION: u32 = 1;

struct TensorRef<'a> {
    name: String,
    dims: Vec<u32>,
    data: &'a [f64],
}

fn tensor_table(params: &SeqNetParams) -> Vec<TensorRef<'_>> {
    let mut table = Vec::new();
    for (j, (w, b)) in params
        .maxout
        .weights
        .iter()
        .zip(&params.maxout.biases)
        .enumerate()
    {
        table.push(TensorRef {
            name: format!("maxout.w{j}"),
            dims: vec![w.rows as u32, w.cols as u32],
            data: &w.data,
        });
        table.push(TensorRef {
            name: format!("maxout.b{j}"),
            dims: vec![b.len() as u32],
            data: b,
        });
    }
    for (dir, lstm) in [("fwd", &params.fwd), ("bwd", &params.bwd)] {
        table.push(TensorRef {
            name: format!("{dir}.w"),
            dims: vec![lstm.w.rows as u32, lstm.w.cols as u32],
            data: &lstm.w.data,
        });
        table.push(TensorRef {
            name: format!("{dir}.u"),
            dims: vec![lstm.u.rows as u32, lstm.u.cols as u32],
            data: &lstm.u.data,
        });
        table.push(TensorRef {
            name: format!("{dir}.b"),
            dims: vec![lstm.b.len() as u32],
            data: &lstm.b,
        });
    }
    table.push(TensorRef {
        name: "proj.w".into(),
        dims: vec![params.proj_w.rows as u32, params.proj_w.cols as u32],
        data: &params.proj_w.data,
    });
    table.push(TensorRef {
        name: "proj.b".into(),
        dims: vec![params.proj_b.len() as u32],
        data: &params.proj_b,
    });
    table
}

pub fn save_params(params: &SeqNetParams, path: &Path) -> Result<(), SeqNetError> {
    let mut out = BufWriter::new(File::create(path)?);
    out.write_u32::<LittleEndian>(MAGIC)?;
    out.write_u32::<LittleEndian>(VERSION)?;
    let id = params.head_id.as_bytes();
    out.write_u32::<LittleEndian>(id.len() as u32)?;
    out.write_all(id)?;
    let table = tensor_table(params);
    out.write_u32::<LittleEndian>(table.len() as u32)?;
    for t in &table {
        let name = t.name.as_bytes();
        out.write_u32::<LittleEndian>(name.len() as u32)?;
        out.write_all(name)?;
        out.write_u32::<LittleEndian>(t.dims.len() as u32)?;
        for &d in &t.dims {
            out.write_u32::<LittleEndian>(d)?;
        }
    }
    for t in &table {
        for &v in t.data {
            out.write_f32::<LittleEndian>(v as f32)?;
        }
    }
    out.flush()?;
    Ok(())
}

pub fn load_params(path: &Path, alphabet: Alphabet) -> Result<SeqNetParams, SeqNetError> {
    let mut r = BufReader::new(File::open(path)?);
    if r.read_u32::<LittleEndian>()? != MAGIC {
        return Err(SeqNetError::ParamFile("bad magic".into()));
    }
    if r.read_u32::<LittleEndian>()? != VERSION {
        return Err(SeqNetError::ParamFile("unsupported version".into()));
    }
    let id_len = r.read_u32::<LittleEndian>()? as usize;
    let mut id = vec![0u8; id_len];
    r.read_exact(&mut id)?;
    let head_id = String::from_utf8(id)
        .map_err(|_| SeqNetError::ParamFile("head id is not UTF-8".into()))?;

    let n_tensors = r.read_u32::<LittleEndian>()? as usize;
    let mut names = Vec::with_capacity(n_tensors);
    let mut dims = Vec::with_capacity(n_tensors);
    for _ in 0..n_tensors {
        let name_len = r.read_u32::<LittleEndian>()? as usize;
        let mut name = vec![0u8; name_len];
        r.read_exact(&mut name)?;
        names.push(
            String::from_utf8(name)
                .map_err(|_| SeqNetError::ParamFile("tensor name is not UTF-8".into()))?,
        );
        let ndim = r.read_u32::<LittleEndian>()? as usize;
        let mut d = Vec::with_capacity(ndim);
        for _ in 0..ndim {
            d.push(r.read_u32::<LittleEndian>()?);
        }
        dims.push(d);
    }
    let mut tensors = std::collections::HashMap::new();
    for (name, d) in names.into_iter().zip(dims) {
        let count: usize = d.iter().map(|&x| x as usize).product();
        let mut data = Vec::with_capacity(count);
        for _ in 0..count {
            data.push(r.read_f32::<LittleEndian>()? as f64);
        }
        tensors.insert(name, (d, data));
    }

    let mut take_mat = |name: &str| -> Result<Mat, SeqNetError> {
        let (d, data) = tensors
            .remove(name)
            .ok_or_else(|| SeqNetError::ParamFile(format!("missing tensor {name}")))?;
        if d.len() != 2 {
            return Err(SeqNetError::ParamFile(format!("{name} is not 2-D")));
        }
        Ok(Mat {
            rows: d[0] as usize,
            cols: d[1] as usize,
            data,
        })
    };
    let mut maxout_w = Vec::new();
    let mut j = 0;
    while tensors.contains_key(&format!("maxout.w{j}")) {
        maxout_w.push(take_mat(&format!("maxout.w{j}"))?);
        j += 1;
    }
    let fwd_w = take_mat("fwd.w")?;
    let fwd_u = take_mat("fwd.u")?;
    let bwd_w = take_mat("bwd.w")?;
    let bwd_u = take_mat("bwd.u")?;
    let proj_w = take_mat("proj.w")?;
    let mut take_vec = |name: &str| -> Result<Vec<f64>, SeqNetError> {
        let (_, data) = tensors
            .remove(name)
            .ok_or_else(|| SeqNetError::ParamFile(format!("missing tensor {name}")))?;
        Ok(data)
    };
    let mut maxout_b = Vec::new();
    for j in 0..maxout_w.len() {
        maxout_b.push(take_vec(&format!("maxout.b{j}"))?);
    }
    let params = SeqNetParams {
        head_id,
        alphabet,
        maxout: MaxoutParams {
            weights: maxout_w,
            biases: maxout_b,
        },
        fwd: LstmParams {
            w: fwd_w,
            u: fwd_u,
            b: take_vec("fwd.b")?,
        },
        bwd: LstmParams {
            w: bwd_w,
            u: bwd_u,
            b: take_vec("bwd.b")?,
        },
        proj_w,
        proj_b: take_vec("proj.b")?,
    };
    if params.proj_w.rows != params.alphabet.num_classes() {
        return Err(SeqNetError::ParamFile(format!(
            "projection has {} classes but alphabet has {}",
            params.proj_w.rows,
            params.alphabet.num_classes()
        )));
    }
    params.check_finite()?;
    Ok(params)
}

pub fn save_alphabet(alphabet: &Alphabet, path: &Path) -> Result<(), SeqNetError> {
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "{}", alphabet.blank_marker())?;
    for &c in alphabet.chars() {
        writeln!(out, "{c}")?;
    }
    out.flush()?;
    Ok(())
}

pub fn load_alphabet(path: &Path) -> Result<Alphabet, SeqNetError> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines();
    let blank_line = lines
        .next()
        .ok_or_else(|| SeqNetError::Alphabet("empty alphabet file".into()))?;
    let mut blank_chars = blank_line.chars();
    let blank = blank_chars
        .next()
        .ok_or_else(|| SeqNetError::Alphabet("blank marker line is empty".into()))?;
    if blank_chars.next().is_some() {
        return Err(SeqNetError::Alphabet(
            "blank marker must be a single code point".into(),
        ));
    }
    let mut chars = Vec::new();
    for line in lines {
        if line.is_empty() {
            continue;
        }
        let mut it = line.chars();
        let c = it.next().expect("non-empty line");
        if it.next().is_some() {
            return Err(SeqNetError::Alphabet(format!(
                "line {line:?} holds more than one code point"
            )));
        }
        chars.push(c);
    }
    Alphabet::new(blank, chars)
}
