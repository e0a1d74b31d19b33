//! Seeded random test instances and their on-disk form.
//!
//! Every draw comes from `Xoshiro256++` seeded through SplitMix64
//! (`seed_from_u64`), so any implementation of those two published
//! generators reproduces an instance from its spec:
//!
//! * uniform on `[0, 1)`: `(next_u64 >> 11)·2⁻⁵³`;
//! * standard normal: Box-Muller, `√(−2 ln(1 − u₁))·cos(2πu₂)`, one output
//!   per pair of uniforms;
//! * uniform index below `k`: Lemire's widening multiply with rejection.
//!
//! Draw order for the Gaussian family is: `A` row-major, support, values,
//! noise. For the DCT family it is: `w`, support, values, noise. The support
//! is the first `s` slots of a partial Fisher-Yates shuffle, then sorted.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use ndarray::{Array1, Array2};
use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;

const MAGIC: &[u8; 8] = b"FBEINST\0";
const FORMAT_VERSION: u32 = 1;

pub const DEFAULT_SIGMA: f64 = 1e-2;
pub const DEFAULT_DCT_F: u64 = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    GaussianUnitColumns,
    OversampledDct,
}

impl Family {
    fn tag(self) -> u32 {
        match self {
            Family::GaussianUnitColumns => 0,
            Family::OversampledDct => 1,
        }
    }

    fn from_tag(tag: u32) -> Result<Self> {
        match tag {
            0 => Ok(Family::GaussianUnitColumns),
            1 => Ok(Family::OversampledDct),
            t => Err(Error::Format(format!("unknown family tag {t}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InstanceSpec {
    pub family: Family,
    pub m: usize,
    pub n: usize,
    pub s: usize,
    pub sigma: f64,
    /// DCT frequency divisor; ignored by the Gaussian family.
    #[serde(rename = "F", default = "default_f")]
    pub f: u64,
    pub seed: u64,
}

fn default_f() -> u64 {
    DEFAULT_DCT_F
}

impl InstanceSpec {
    pub fn gaussian(m: usize, n: usize, s: usize, seed: u64) -> Self {
        Self { family: Family::GaussianUnitColumns, m, n, s, sigma: DEFAULT_SIGMA, f: DEFAULT_DCT_F, seed }
    }

    pub fn dct(m: usize, n: usize, s: usize, seed: u64) -> Self {
        Self { family: Family::OversampledDct, m, n, s, sigma: DEFAULT_SIGMA, f: DEFAULT_DCT_F, seed }
    }

    pub fn validate(&self) -> Result<()> {
        if self.m == 0 || self.s == 0 || self.s > self.n {
            return Err(Error::InvalidSpec(format!(
                "need m > 0 and 0 < s <= n, got m = {}, n = {}, s = {}",
                self.m, self.n, self.s
            )));
        }
        if !(self.sigma >= 0.0) || !self.sigma.is_finite() {
            return Err(Error::InvalidSpec(format!("sigma must be finite and >= 0, got {}", self.sigma)));
        }
        if self.f == 0 {
            return Err(Error::InvalidSpec("F must be at least 1".into()));
        }
        Ok(())
    }

    /// Non-fatal oddities; currently only `m > n`.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.m > self.n {
            out.push(format!("m = {} exceeds n = {}; not a compressed-sensing regime", self.m, self.n));
        }
        out
    }
}

/// A generated problem: design `A`, data `b`, and the sparse ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub spec: InstanceSpec,
    pub a: Arc<Array2<f64>>,
    pub b: Array1<f64>,
    /// Sorted support of the ground truth.
    pub support: Vec<usize>,
    /// Ground-truth values on `support`.
    pub values: Array1<f64>,
    /// Sampling points of the DCT family.
    pub w: Option<Array1<f64>>,
}

/// The sampling streams described in the module docs.
struct Stream(Xoshiro256PlusPlus);

impl Stream {
    fn new(seed: u64) -> Self {
        Self(Xoshiro256PlusPlus::seed_from_u64(seed))
    }

    fn uniform(&mut self) -> f64 {
        (self.0.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    fn normal(&mut self) -> f64 {
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    fn below(&mut self, k: u64) -> u64 {
        let mut m = u128::from(self.0.next_u64()) * u128::from(k);
        if (m as u64) < k {
            let threshold = k.wrapping_neg() % k;
            while (m as u64) < threshold {
                m = u128::from(self.0.next_u64()) * u128::from(k);
            }
        }
        (m >> 64) as u64
    }

    fn support(&mut self, n: usize, s: usize) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..n).collect();
        for i in 0..s {
            let j = i + self.below((n - i) as u64) as usize;
            idx.swap(i, j);
        }
        idx.truncate(s);
        idx.sort_unstable();
        idx
    }
}

fn measurements(a: &Array2<f64>, support: &[usize], values: &Array1<f64>, sigma: f64, rng: &mut Stream) -> Array1<f64> {
    let mut b = Array1::zeros(a.nrows());
    for (&j, &v) in support.iter().zip(values) {
        b.scaled_add(v, &a.column(j));
    }
    for bi in b.iter_mut() {
        *bi += sigma * rng.normal();
    }
    b
}

fn check_family(spec: &InstanceSpec, family: Family) -> Result<()> {
    spec.validate()?;
    if spec.family != family {
        return Err(Error::InvalidSpec(format!("expected family {family:?}, got {:?}", spec.family)));
    }
    Ok(())
}

/// Standard normal `A` with unit-norm columns, `b = A_T y + σn̂`.
pub fn gen_gaussian(spec: &InstanceSpec) -> Result<Instance> {
    check_family(spec, Family::GaussianUnitColumns)?;
    let mut rng = Stream::new(spec.seed);
    let mut a = Array2::from_shape_simple_fn((spec.m, spec.n), || rng.normal());
    for mut col in a.columns_mut() {
        let nrm = linalg::norm(col.view());
        col.mapv_inplace(|v| v / nrm);
    }
    let support = rng.support(spec.n, spec.s);
    let values = Array1::from_shape_simple_fn(spec.s, || rng.normal());
    let b = measurements(&a, &support, &values, spec.sigma, &mut rng);
    Ok(Instance { spec: *spec, a: Arc::new(a), b, support, values, w: None })
}

/// `A_j = cos(2πjw/F)/√m` for `j = 1, ..., n`.
pub fn dct_matrix(w: &Array1<f64>, n: usize, f: u64) -> Array2<f64> {
    let m = w.len();
    let scale = 1.0 / (m as f64).sqrt();
    let f = f as f64;
    Array2::from_shape_fn((m, n), |(i, j)| {
        scale * (std::f64::consts::TAU * (j + 1) as f64 * w[i] / f).cos()
    })
}

/// Over-sampled partial DCT design with `w` uniform on `[0, 1)ᵐ`.
pub fn gen_dct(spec: &InstanceSpec) -> Result<Instance> {
    check_family(spec, Family::OversampledDct)?;
    let mut rng = Stream::new(spec.seed);
    let w = Array1::from_shape_simple_fn(spec.m, || rng.uniform());
    let a = dct_matrix(&w, spec.n, spec.f);
    let support = rng.support(spec.n, spec.s);
    let values = Array1::from_shape_simple_fn(spec.s, || rng.normal());
    let b = measurements(&a, &support, &values, spec.sigma, &mut rng);
    Ok(Instance { spec: *spec, a: Arc::new(a), b, support, values, w: Some(w) })
}

/// Dispatches on `spec.family`.
pub fn generate(spec: &InstanceSpec) -> Result<Instance> {
    match spec.family {
        Family::GaussianUnitColumns => gen_gaussian(spec),
        Family::OversampledDct => gen_dct(spec),
    }
}

/// Path of the JSON sidecar next to an instance file.
pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut os = path.as_os_str().to_owned();
    os.push(".json");
    PathBuf::from(os)
}

impl Instance {
    /// Header, row-major `A`, `b`, support (u64), values, and `w` for the DCT
    /// family. Everything little-endian.
    pub fn to_bytes(&self) -> Vec<u8> {
        let InstanceSpec { family, m, n, s, sigma, f, seed } = self.spec;
        let mut out = Vec::with_capacity(64 + 8 * (m * n + 2 * m + 2 * s));
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        out.extend_from_slice(&family.tag().to_le_bytes());
        for v in [m as u64, n as u64, s as u64] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out.extend_from_slice(&sigma.to_le_bytes());
        out.extend_from_slice(&f.to_le_bytes());
        out.extend_from_slice(&seed.to_le_bytes());
        // iter() walks logical order, so this is row-major whatever the layout
        for v in self.a.iter().chain(self.b.iter()) {
            out.extend_from_slice(&v.to_le_bytes());
        }
        for &j in &self.support {
            out.extend_from_slice(&(j as u64).to_le_bytes());
        }
        for v in self.values.iter().chain(self.w.iter().flatten()) {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(8)? != MAGIC {
            return Err(Error::Format("bad magic bytes".into()));
        }
        let version = r.u32()?;
        if version != FORMAT_VERSION {
            return Err(Error::Format(format!("unsupported format version {version}")));
        }
        let family = Family::from_tag(r.u32()?)?;
        let m = r.usize()?;
        let n = r.usize()?;
        let s = r.usize()?;
        let sigma = r.f64()?;
        let f = r.u64()?;
        let seed = r.u64()?;
        let spec = InstanceSpec { family, m, n, s, sigma, f, seed };
        spec.validate().map_err(|e| Error::Format(format!("header: {e}")))?;

        let len = m.checked_mul(n).ok_or_else(|| Error::Format("matrix size overflows".into()))?;
        let a = Array2::from_shape_vec((m, n), r.f64s(len)?).map_err(|e| Error::Format(e.to_string()))?;
        let b = Array1::from(r.f64s(m)?);
        let support = (0..s).map(|_| r.usize()).collect::<Result<Vec<_>>>()?;
        if support.iter().any(|&j| j >= n) {
            return Err(Error::Format("support index out of range".into()));
        }
        let values = Array1::from(r.f64s(s)?);
        let w = match family {
            Family::OversampledDct => Some(Array1::from(r.f64s(m)?)),
            Family::GaussianUnitColumns => None,
        };
        if r.pos != bytes.len() {
            return Err(Error::Format(format!("{} trailing bytes", bytes.len() - r.pos)));
        }
        Ok(Self { spec, a: Arc::new(a), b, support, values, w })
    }

    /// Writes the binary file and its JSON sidecar.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut file = fs::File::create(path)?;
        file.write_all(&self.to_bytes())?;
        fs::write(sidecar_path(path), serde_json::to_string_pretty(&self.spec)?)?;
        Ok(())
    }

    /// Reads a binary file; the sidecar, when present, must agree with the header.
    pub fn load(path: &Path) -> Result<Self> {
        let inst = Self::from_bytes(&fs::read(path)?)?;
        let side = sidecar_path(path);
        if side.exists() {
            let spec: InstanceSpec = serde_json::from_str(&fs::read_to_string(side)?)?;
            if spec != inst.spec {
                return Err(Error::Format("sidecar spec disagrees with file header".into()));
            }
        }
        Ok(inst)
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, k: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(k).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| Error::Format("unexpected end of file".into()))?;
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn usize(&mut self) -> Result<usize> {
        usize::try_from(self.u64()?).map_err(|_| Error::Format("size does not fit in usize".into()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64s(&mut self, k: usize) -> Result<Vec<f64>> {
        let bytes = self.take(k.checked_mul(8).ok_or_else(|| Error::Format("length overflows".into()))?)?;
        Ok(bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect())
    }
}
