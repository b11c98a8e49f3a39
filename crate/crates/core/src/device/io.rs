//! On-disk device format.
//!
//! A device is a directory holding a text header (`header.txt`, magic line
//! `NEGFMINI1`) plus little-endian binary arrays: `positions.bin`,
//! `neighbors.bin`, `operators.bin` (H0, H1, S0, S1, Phi0, Phi1 as
//! diag/upper/lower block groups) and `dh.bin`. Every array is prefixed by a
//! 16-byte shape record of four u32 values: a dtype tag (0 = f64,
//! 1 = complex128 interleaved re/im, 2 = u32) and up to three extents.

use super::material::{DhTensor, MaterialOperators};
use super::{Device, DeviceError, DeviceStructure, GridParams, LatticeKind, N3D};
use crate::linalg::{BlockTriMatrix, CMat, C64};
use std::collections::BTreeMap;
use std::fs;
use std::io::{Read, Write};
use std::path::Path;

const MAGIC: &str = "NEGFMINI1";

const TAG_F64: u32 = 0;
const TAG_C128: u32 = 1;
const TAG_U32: u32 = 2;

fn write_record(w: &mut impl Write, tag: u32, dims: [u32; 3]) -> std::io::Result<()> {
    for v in [tag, dims[0], dims[1], dims[2]] {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

fn read_record(r: &mut impl Read) -> Result<(u32, [u32; 3]), DeviceError> {
    let mut buf = [0u8; 16];
    r.read_exact(&mut buf)?;
    let f = |i: usize| u32::from_le_bytes(buf[4 * i..4 * i + 4].try_into().unwrap());
    Ok((f(0), [f(1), f(2), f(3)]))
}

fn expect_record(
    r: &mut impl Read,
    what: &str,
    tag: u32,
    dims: [u32; 3],
) -> Result<(), DeviceError> {
    let (got_tag, got_dims) = read_record(r)?;
    if got_tag != tag || got_dims != dims {
        return Err(DeviceError::DimensionMismatch(format!(
            "{what}: record tag {got_tag} dims {got_dims:?}, expected tag {tag} dims {dims:?}"
        )));
    }
    Ok(())
}

fn write_c64s(w: &mut impl Write, data: &[C64]) -> std::io::Result<()> {
    for v in data {
        w.write_all(&v.re.to_le_bytes())?;
        w.write_all(&v.im.to_le_bytes())?;
    }
    Ok(())
}

fn read_c64s(r: &mut impl Read, n: usize) -> Result<Vec<C64>, DeviceError> {
    let mut buf = vec![0u8; 16 * n];
    r.read_exact(&mut buf)?;
    Ok((0..n)
        .map(|i| {
            let re = f64::from_le_bytes(buf[16 * i..16 * i + 8].try_into().unwrap());
            let im = f64::from_le_bytes(buf[16 * i + 8..16 * i + 16].try_into().unwrap());
            C64::new(re, im)
        })
        .collect())
}

fn write_block_tri(w: &mut impl Write, m: &BlockTriMatrix) -> std::io::Result<()> {
    let (b, d) = (m.bnum() as u32, m.blockdim() as u32);
    write_record(w, TAG_C128, [b, d, d])?;
    for i in 0..m.bnum() {
        write_c64s(w, m.diag(i).data())?;
    }
    write_record(w, TAG_C128, [b - 1, d, d])?;
    for i in 0..m.bnum() - 1 {
        write_c64s(w, m.upper(i).data())?;
    }
    write_record(w, TAG_C128, [b - 1, d, d])?;
    for i in 0..m.bnum() - 1 {
        write_c64s(w, m.lower(i).data())?;
    }
    Ok(())
}

fn read_block_tri(
    r: &mut impl Read,
    what: &str,
    bnum: usize,
    dim: usize,
) -> Result<BlockTriMatrix, DeviceError> {
    let mut m = BlockTriMatrix::zeros(bnum, dim);
    expect_record(r, what, TAG_C128, [bnum as u32, dim as u32, dim as u32])?;
    for i in 0..bnum {
        let data = read_c64s(r, dim * dim)?;
        *m.diag_mut(i) = CMat::from_rows(dim, dim, data);
    }
    expect_record(r, what, TAG_C128, [(bnum - 1) as u32, dim as u32, dim as u32])?;
    for i in 0..bnum - 1 {
        let data = read_c64s(r, dim * dim)?;
        *m.upper_mut(i) = CMat::from_rows(dim, dim, data);
    }
    expect_record(r, what, TAG_C128, [(bnum - 1) as u32, dim as u32, dim as u32])?;
    for i in 0..bnum - 1 {
        let data = read_c64s(r, dim * dim)?;
        *m.lower_mut(i) = CMat::from_rows(dim, dim, data);
    }
    Ok(m)
}

/// Serialize a device into `dir` (created if absent).
pub fn save_device(dev: &Device, dir: &Path) -> Result<(), DeviceError> {
    fs::create_dir_all(dir)?;
    let s = &dev.structure;
    let g = dev.grid.params();

    let mut header = String::new();
    header.push_str(MAGIC);
    header.push('\n');
    let mut field = |k: &str, v: String| {
        header.push_str(k);
        header.push(' ');
        header.push_str(&v);
        header.push('\n');
    };
    field("na", s.na.to_string());
    field("nb", s.nb.to_string());
    field("norb", s.norb.to_string());
    field("n3d", s.n3d.to_string());
    field("bnum", s.bnum.to_string());
    field("nkz", g.nkz.to_string());
    field("nqz", g.nqz.to_string());
    field("ne", g.ne.to_string());
    field("nomega", g.nomega.to_string());
    field("omega_step", g.omega_step.to_string());
    field("emin", format!("{:?}", g.emin));
    field("emax", format!("{:?}", g.emax));
    field("vds", format!("{:?}", s.vds));
    field("vgs", format!("{:?}", s.vgs));
    field("kind", s.kind.as_str().to_string());
    field("seed", dev.seed.to_string());
    fs::write(dir.join("header.txt"), header)?;

    let mut w = fs::File::create(dir.join("positions.bin"))?;
    write_record(&mut w, TAG_F64, [s.na as u32, 2, 1])?;
    for p in &s.positions {
        w.write_all(&p[0].to_le_bytes())?;
        w.write_all(&p[1].to_le_bytes())?;
    }

    let mut w = fs::File::create(dir.join("neighbors.bin"))?;
    write_record(&mut w, TAG_U32, [s.na as u32, s.nb as u32, 1])?;
    for list in &s.neighbors {
        for &b in list {
            w.write_all(&(b as u32).to_le_bytes())?;
        }
    }

    let mut w = fs::File::create(dir.join("operators.bin"))?;
    for op in [
        &dev.ops.h0,
        &dev.ops.h1,
        &dev.ops.s0,
        &dev.ops.s1,
        &dev.ops.phi0,
        &dev.ops.phi1,
    ] {
        write_block_tri(&mut w, op)?;
    }

    let mut w = fs::File::create(dir.join("dh.bin"))?;
    write_record(
        &mut w,
        TAG_C128,
        [(s.na * s.nb * N3D) as u32, s.norb as u32, s.norb as u32],
    )?;
    write_c64s(&mut w, &dev.ops.dh.flat_values())?;
    Ok(())
}

fn parse_header(text: &str) -> Result<BTreeMap<String, String>, DeviceError> {
    let mut lines = text.lines();
    match lines.next() {
        Some(l) if l.trim() == MAGIC => {}
        other => {
            return Err(DeviceError::BadHeader(format!(
                "missing magic {MAGIC:?}, found {other:?}"
            )))
        }
    }
    let mut map = BTreeMap::new();
    for line in lines {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once(' ').ok_or_else(|| {
            DeviceError::BadHeader(format!("header line without value: {line:?}"))
        })?;
        map.insert(k.to_string(), v.trim().to_string());
    }
    Ok(map)
}

fn header_get<T: std::str::FromStr>(
    map: &BTreeMap<String, String>,
    key: &str,
) -> Result<T, DeviceError> {
    map.get(key)
        .ok_or_else(|| DeviceError::BadHeader(format!("missing field {key:?}")))?
        .parse::<T>()
        .map_err(|_| DeviceError::BadHeader(format!("field {key:?} has value {:?}", map[key])))
}

/// Load and fully validate a device directory.
pub fn load_device(dir: &Path) -> Result<Device, DeviceError> {
    let header = parse_header(&fs::read_to_string(dir.join("header.txt"))?)?;
    let na: usize = header_get(&header, "na")?;
    let nb: usize = header_get(&header, "nb")?;
    let norb: usize = header_get(&header, "norb")?;
    let n3d: usize = header_get(&header, "n3d")?;
    let bnum: usize = header_get(&header, "bnum")?;
    let seed: u64 = header_get(&header, "seed")?;
    let kind_str: String = header_get(&header, "kind")?;
    let kind = LatticeKind::parse(&kind_str)
        .ok_or_else(|| DeviceError::BadHeader(format!("unknown lattice kind {kind_str:?}")))?;
    if n3d != N3D {
        return Err(DeviceError::BadHeader(format!("n3d = {n3d}, expected {N3D}")));
    }
    if na == 0 || bnum == 0 || na % bnum != 0 {
        return Err(DeviceError::InvalidPartition { na, bnum });
    }
    let grid = GridParams {
        nkz: header_get(&header, "nkz")?,
        nqz: header_get(&header, "nqz")?,
        ne: header_get(&header, "ne")?,
        nomega: header_get(&header, "nomega")?,
        emin: header_get(&header, "emin")?,
        emax: header_get(&header, "emax")?,
        omega_step: header_get(&header, "omega_step")?,
    }
    .build()?;

    let mut r = fs::File::open(dir.join("positions.bin"))?;
    expect_record(&mut r, "positions", TAG_F64, [na as u32, 2, 1])?;
    let mut buf = vec![0u8; na * 16];
    r.read_exact(&mut buf)?;
    let positions: Vec<[f64; 2]> = (0..na)
        .map(|i| {
            [
                f64::from_le_bytes(buf[16 * i..16 * i + 8].try_into().unwrap()),
                f64::from_le_bytes(buf[16 * i + 8..16 * i + 16].try_into().unwrap()),
            ]
        })
        .collect();

    let mut r = fs::File::open(dir.join("neighbors.bin"))?;
    expect_record(&mut r, "neighbors", TAG_U32, [na as u32, nb as u32, 1])?;
    let mut buf = vec![0u8; na * nb * 4];
    r.read_exact(&mut buf)?;
    let neighbors: Vec<Vec<usize>> = (0..na)
        .map(|a| {
            (0..nb)
                .map(|s| {
                    u32::from_le_bytes(buf[4 * (a * nb + s)..4 * (a * nb + s) + 4].try_into().unwrap())
                        as usize
                })
                .collect()
        })
        .collect();

    let structure = DeviceStructure {
        kind,
        na,
        positions,
        neighbors,
        nb,
        norb,
        n3d,
        bnum,
        vds: header_get(&header, "vds")?,
        vgs: header_get(&header, "vgs")?,
    };
    structure.validate()?;

    let dim_e = na / bnum * norb;
    let dim_ph = na / bnum * N3D;
    let mut r = fs::File::open(dir.join("operators.bin"))?;
    let h0 = read_block_tri(&mut r, "H0", bnum, dim_e)?;
    let h1 = read_block_tri(&mut r, "H1", bnum, dim_e)?;
    let s0 = read_block_tri(&mut r, "S0", bnum, dim_e)?;
    let s1 = read_block_tri(&mut r, "S1", bnum, dim_e)?;
    let phi0 = read_block_tri(&mut r, "Phi0", bnum, dim_ph)?;
    let phi1 = read_block_tri(&mut r, "Phi1", bnum, dim_ph)?;

    let mut r = fs::File::open(dir.join("dh.bin"))?;
    expect_record(
        &mut r,
        "dH",
        TAG_C128,
        [(na * nb * N3D) as u32, norb as u32, norb as u32],
    )?;
    let flat = read_c64s(&mut r, na * nb * N3D * norb * norb)?;
    let mut dh = DhTensor::zeros(na, nb, norb);
    let mm = norb * norb;
    for idx in 0..na * nb * N3D {
        let a = idx / (nb * N3D);
        let rem = idx % (nb * N3D);
        let slot = rem / N3D;
        let dir = rem % N3D;
        dh.set(
            a,
            slot,
            dir,
            CMat::from_rows(norb, norb, flat[idx * mm..(idx + 1) * mm].to_vec()),
        );
    }

    let ops = MaterialOperators {
        norb,
        h0,
        h1,
        s0,
        s1,
        phi0,
        phi1,
        dh,
    };
    ops.validate(&structure)?;

    Ok(Device {
        structure,
        grid,
        ops,
        seed,
    })
}
