//! Momentum/energy/frequency grids of the simulation.

use super::DeviceError;

/// Grid sizes and the energy window.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridParams {
    pub nkz: usize,
    pub nqz: usize,
    pub ne: usize,
    pub nomega: usize,
    pub emin: f64,
    pub emax: f64,
    /// Frequency spacing in units of the energy spacing: dω = omega_step·dE.
    pub omega_step: usize,
}

impl GridParams {
    pub fn new(nkz: usize, nqz: usize, ne: usize, nomega: usize, emin: f64, emax: f64) -> Self {
        Self {
            nkz,
            nqz,
            ne,
            nomega,
            emin,
            emax,
            omega_step: 1,
        }
    }

    pub fn build(&self) -> Result<SpectralGrid, DeviceError> {
        SpectralGrid::new(self)
    }
}

/// Uniform spectral grids. Momentum points are 2πk/N wrapped into (−π, π],
/// which keeps the set symmetric about zero and closed under differences;
/// frequencies are positive integer multiples of the energy spacing, so
/// every E ± ħω lands exactly on the energy grid.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralGrid {
    pub kz: Vec<f64>,
    pub qz: Vec<f64>,
    pub energies: Vec<f64>,
    pub frequencies: Vec<f64>,
    pub de: f64,
    pub domega: f64,
    pub omega_step: usize,
}

fn momentum_points(n: usize) -> Vec<f64> {
    use std::f64::consts::PI;
    (0..n)
        .map(|k| {
            let mut x = 2.0 * PI * k as f64 / n as f64;
            if x > PI {
                x -= 2.0 * PI;
            }
            x
        })
        .collect()
}

impl SpectralGrid {
    pub fn new(p: &GridParams) -> Result<Self, DeviceError> {
        if p.nkz == 0 || p.nqz == 0 || p.ne < 2 || p.nomega == 0 {
            return Err(DeviceError::InvalidGrid(format!(
                "grid sizes nkz={} nqz={} ne={} nomega={}",
                p.nkz, p.nqz, p.ne, p.nomega
            )));
        }
        if p.nkz != p.nqz {
            return Err(DeviceError::InvalidGrid(format!(
                "nkz = {} and nqz = {} must be equal for the momentum wrap",
                p.nkz, p.nqz
            )));
        }
        if p.emax <= p.emin {
            return Err(DeviceError::InvalidGrid(format!(
                "energy window [{}, {}]",
                p.emin, p.emax
            )));
        }
        if p.omega_step == 0 {
            return Err(DeviceError::InvalidGrid("omega_step must be >= 1".into()));
        }
        if p.ne < 2 * p.nomega * p.omega_step {
            return Err(DeviceError::InvalidGrid(format!(
                "ne = {} < 2·nomega·omega_step = {}; no interior energy has full \
                 scattering support",
                p.ne,
                2 * p.nomega * p.omega_step
            )));
        }
        let de = (p.emax - p.emin) / (p.ne - 1) as f64;
        let domega = p.omega_step as f64 * de;
        let energies = (0..p.ne).map(|i| p.emin + i as f64 * de).collect();
        let frequencies = (1..=p.nomega).map(|k| k as f64 * domega).collect();
        Ok(Self {
            kz: momentum_points(p.nkz),
            qz: momentum_points(p.nqz),
            energies,
            frequencies,
            de,
            domega,
            omega_step: p.omega_step,
        })
    }

    pub fn nkz(&self) -> usize {
        self.kz.len()
    }

    pub fn nqz(&self) -> usize {
        self.qz.len()
    }

    pub fn ne(&self) -> usize {
        self.energies.len()
    }

    pub fn nomega(&self) -> usize {
        self.frequencies.len()
    }

    /// Index of kz[ik] − qz[iq] on the kz grid (periodic wrap).
    pub fn kz_minus_qz(&self, ik: usize, iq: usize) -> usize {
        (ik + self.nkz() - iq) % self.nkz()
    }

    /// Index of kz[ik] + qz[iq] on the kz grid (periodic wrap).
    pub fn kz_plus_qz(&self, ik: usize, iq: usize) -> usize {
        (ik + iq) % self.nkz()
    }

    /// Energy-grid steps spanned by frequency index `iw`.
    pub fn omega_steps(&self, iw: usize) -> usize {
        (iw + 1) * self.omega_step
    }

    /// Index of E[ie] + sign·ħω[iw], or None when it falls off the grid
    /// (zero extension: the contribution is dropped).
    pub fn energy_shift(&self, ie: usize, iw: usize, sign: i64) -> Option<usize> {
        let t = ie as i64 + sign * self.omega_steps(iw) as i64;
        if t < 0 || t >= self.ne() as i64 {
            None
        } else {
            Some(t as usize)
        }
    }

    pub fn params(&self) -> GridParams {
        GridParams {
            nkz: self.nkz(),
            nqz: self.nqz(),
            ne: self.ne(),
            nomega: self.nomega(),
            emin: self.energies[0],
            emax: *self.energies.last().unwrap(),
            omega_step: self.omega_step,
        }
    }
}
