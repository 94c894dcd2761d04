//! Systematic Reed-Solomon encoding and bounded-distance errors-and-erasures
//! decoding, plus a mis-correction probability estimator.
//!
//! The decoder is the standard textbook pipeline: syndrome computation,
//! erasure-locator polynomial from the supplied positions, Berlekamp-Massey
//! on the Forney-modified syndromes for the unknown-error locator, Chien
//! search for the errata roots, and Forney's algorithm for the magnitudes.
//! With `f` erasures the decoder corrects up to `e` additional unknown
//! errors whenever `2e + f ≤ n − k` — the capability the whole receiver
//! chain is built to exploit: every corrupted position the erasure marker
//! identifies in advance costs one unit of parity budget instead of two.
//!
//! Polynomial conventions: codeword symbol 0 (first message symbol) is the
//! *highest-degree* coefficient, so a codeword is c(x) = Σ_p c_p·x^(n−1−p)
//! and the location value of position p is X_p = α^(n−1−p). Generator roots
//! are α^fcr … α^(fcr+n−k−1) with fcr = 1.

use crate::gf::{Field, GfError};
use thiserror::Error;

/// Errors for malformed decoder/encoder inputs. Decode *failure* (the
/// received word is beyond the code's capability) is not an error — it is a
/// normal outcome reported through [`RsDecodeResult`].
#[derive(Debug, Error, PartialEq, Eq)]
pub enum RsError {
    #[error("code parameters invalid: {0}")]
    BadCode(String),
    #[error("expected {expected} symbols, got {got}")]
    WrongLength { expected: usize, got: usize },
    #[error("{count} erasures exceed the parity budget n−k = {budget}")]
    TooManyErasures { count: usize, budget: usize },
    #[error("erasure position {0} out of range")]
    ErasureOutOfRange(usize),
    #[error(transparent)]
    Field(#[from] GfError),
}

/// A Reed-Solomon code over a constructed field.
#[derive(Debug, Clone)]
pub struct RsCode {
    field: Field,
    n: usize,
    k: usize,
    fcr: usize,
    /// Generator polynomial, low-degree coefficient first; gen_poly[n−k] = 1.
    gen_poly: Vec<u8>,
}

impl RsCode {
    /// Builds an (n, k) code with first consecutive root α^fcr.
    pub fn new(field: Field, n: usize, k: usize, fcr: usize) -> Result<RsCode, RsError> {
        if n > field.order() {
            return Err(RsError::BadCode(format!(
                "n = {n} exceeds field order {}",
                field.order()
            )));
        }
        if k == 0 || k >= n {
            return Err(RsError::BadCode(format!("need 0 < k < n, got k = {k}, n = {n}")));
        }
        if !(n - k).is_multiple_of(2) {
            return Err(RsError::BadCode(format!("n − k = {} must be even", n - k)));
        }
        // gen = Π_{i=fcr}^{fcr+n−k−1} (x − α^i), built up one root at a time.
        let mut gen = vec![1u8];
        for i in 0..(n - k) {
            let root = field.alpha_pow((fcr + i) as i64);
            let mut next = vec![0u8; gen.len() + 1];
            for (d, &g) in gen.iter().enumerate() {
                next[d + 1] ^= g; // x · gen
                next[d] ^= field.mul(g, root); // root · gen (− = + in char 2)
            }
            gen = next;
        }
        Ok(RsCode { field, n, k, fcr, gen_poly: gen })
    }

    /// The production (255, 223) code over GF(2^8)/0x11D.
    pub fn production() -> RsCode {
        let field = Field::build(crate::gf::FieldSpec::GF256).expect("GF256 is primitive");
        RsCode::new(field, 255, 223, 1).expect("(255,223) is valid")
    }

    /// The desk-scale (15, 9) code over GF(2^4)/0x13.
    pub fn desk_scale() -> RsCode {
        let field = Field::build(crate::gf::FieldSpec::GF16).expect("GF16 is primitive");
        RsCode::new(field, 15, 9, 1).expect("(15,9) is valid")
    }

    pub fn field(&self) -> &Field {
        &self.field
    }
    pub fn n(&self) -> usize {
        self.n
    }
    pub fn k(&self) -> usize {
        self.k
    }
    /// Unknown-error capability with no erasures, t = (n−k)/2.
    pub fn t(&self) -> usize {
        (self.n - self.k) / 2
    }
    /// Parity budget n − k.
    pub fn parity_len(&self) -> usize {
        self.n - self.k
    }
    pub fn fcr(&self) -> usize {
        self.fcr
    }
    pub fn gen_poly(&self) -> &[u8] {
        &self.gen_poly
    }

    /// Location value X_p = α^(n−1−p) for symbol position p.
    #[inline]
    fn loc(&self, p: usize) -> u8 {
        self.field.alpha_pow((self.n - 1 - p) as i64)
    }

    /// Evaluates the received word (position 0 = highest degree) at `x`.
    fn eval_received(&self, word: &[u8], x: u8) -> u8 {
        word.iter().fold(0u8, |acc, &c| self.field.mul(acc, x) ^ c)
    }
}

/// A set of erasure positions: symbol indices known (or suspected) corrupt
/// before decoding. Deduplicated and kept sorted.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ErasureSet {
    positions: Vec<usize>,
}

impl ErasureSet {
    pub fn empty() -> ErasureSet {
        ErasureSet::default()
    }

    /// Builds a set from arbitrary positions, deduplicating.
    pub fn new(mut positions: Vec<usize>) -> ErasureSet {
        positions.sort_unstable();
        positions.dedup();
        ErasureSet { positions }
    }

    pub fn positions(&self) -> &[usize] {
        &self.positions
    }
    pub fn len(&self) -> usize {
        self.positions.len()
    }
    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }
}

impl FromIterator<usize> for ErasureSet {
    fn from_iter<T: IntoIterator<Item = usize>>(iter: T) -> Self {
        ErasureSet::new(iter.into_iter().collect())
    }
}

/// Outcome of one decode attempt.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RsOutcome {
    Success,
    Failure,
}

/// Result of [`rs_decode`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RsDecodeResult {
    pub outcome: RsOutcome,
    /// Corrected codeword; meaningful only on success.
    pub corrected: Vec<u8>,
    /// Corrected positions that were *not* supplied as erasures.
    pub errors_found: usize,
    /// Erasure positions supplied to the decode.
    pub erasures_used: usize,
}

impl RsDecodeResult {
    fn failure(erasures_used: usize) -> RsDecodeResult {
        RsDecodeResult {
            outcome: RsOutcome::Failure,
            corrected: Vec::new(),
            errors_found: 0,
            erasures_used,
        }
    }

    pub fn is_success(&self) -> bool {
        self.outcome == RsOutcome::Success
    }
}

/// Systematic encode: message followed by n−k parity symbols, where parity
/// is the remainder of msg(x)·x^(n−k) divided by the generator polynomial.
pub fn rs_encode(msg: &[u8], code: &RsCode) -> Result<Vec<u8>, RsError> {
    if msg.len() != code.k {
        return Err(RsError::WrongLength { expected: code.k, got: msg.len() });
    }
    let f = &code.field;
    let parity_len = code.parity_len();
    // Polynomial long division, tracking only the sliding remainder.
    let mut rem = vec![0u8; parity_len];
    for &m in msg {
        let coef = m ^ rem[0];
        rem.rotate_left(1);
        rem[parity_len - 1] = 0;
        if coef != 0 {
            for (d, r) in rem.iter_mut().enumerate() {
                // gen_poly is stored low-first; remainder slot d holds the
                // coefficient of x^(parity_len−1−d).
                *r ^= f.mul(coef, code.gen_poly[parity_len - 1 - d]);
            }
        }
    }
    let mut out = Vec::with_capacity(code.n);
    out.extend_from_slice(msg);
    out.extend_from_slice(&rem);
    Ok(out)
}

/// Bounded-distance errors-and-erasures decode.
///
/// Returns success with the corrected codeword when the received word lies
/// within `2e + f ≤ n − k` of a codeword (e unknown errors, f = supplied
/// erasures); otherwise failure — or, with small probability quantified by
/// [`miscorrection_estimate`], a mis-correction onto a different codeword.
pub fn rs_decode(
    received: &[u8],
    erasures: &ErasureSet,
    code: &RsCode,
) -> Result<RsDecodeResult, RsError> {
    if received.len() != code.n {
        return Err(RsError::WrongLength { expected: code.n, got: received.len() });
    }
    let parity_len = code.parity_len();
    let f_count = erasures.len();
    if f_count > parity_len {
        return Err(RsError::TooManyErasures { count: f_count, budget: parity_len });
    }
    if let Some(&p) = erasures.positions().iter().find(|&&p| p >= code.n) {
        return Err(RsError::ErasureOutOfRange(p));
    }
    let f = &code.field;

    // Syndromes S_j = r(α^(fcr+j)). All zero means r is already a codeword.
    let syndromes: Vec<u8> = (0..parity_len)
        .map(|j| code.eval_received(received, f.alpha_pow((code.fcr + j) as i64)))
        .collect();
    if syndromes.iter().all(|&s| s == 0) {
        return Ok(RsDecodeResult {
            outcome: RsOutcome::Success,
            corrected: received.to_vec(),
            errors_found: 0,
            erasures_used: f_count,
        });
    }

    // Erasure locator Γ(x) = Π (1 − X_p·x), low-degree first.
    let mut gamma = vec![1u8];
    for &p in erasures.positions() {
        let x_p = code.loc(p);
        let mut next = vec![0u8; gamma.len() + 1];
        for (d, &g) in gamma.iter().enumerate() {
            next[d] ^= g;
            next[d + 1] ^= f.mul(g, x_p);
        }
        gamma = next;
    }

    // Forney syndromes: coefficients f_count.. of Γ(x)·S(x), which remove
    // the erasure contribution so Berlekamp-Massey sees only unknown errors.
    let gs = poly_mul(f, &gamma, &syndromes);
    let forney_syndromes: Vec<u8> =
        (0..parity_len - f_count).map(|j| *gs.get(j + f_count).unwrap_or(&0)).collect();

    // Berlekamp-Massey for the unknown-error locator Λ (Λ(0) = 1).
    let lambda = match berlekamp_massey(f, &forney_syndromes) {
        Some(l) => l,
        None => return Ok(RsDecodeResult::failure(f_count)),
    };
    let e_count = lambda.len() - 1;
    if 2 * e_count + f_count > parity_len {
        return Ok(RsDecodeResult::failure(f_count));
    }

    // Errata locator Ψ = Λ·Γ and its roots via Chien search over all n
    // positions. Every root X_p^(−1) marks an errata at position p.
    let psi = poly_mul(f, &lambda, &gamma);
    let psi_deg = psi.len() - 1;
    let mut errata_pos = Vec::with_capacity(psi_deg);
    for p in 0..code.n {
        let x_inv = f.inv(code.loc(p)).expect("locations are nonzero");
        if poly_eval_low_first(f, &psi, x_inv) == 0 {
            errata_pos.push(p);
        }
    }
    if errata_pos.len() != psi_deg {
        // Locator degree and root count disagree: beyond capability.
        return Ok(RsDecodeResult::failure(f_count));
    }

    // Errata evaluator Ω = S·Ψ mod x^(n−k), then Forney magnitudes
    // Y_p = X_p^(1−fcr) · Ω(X_p^(−1)) / Ψ'(X_p^(−1)).
    let mut omega = poly_mul(f, &syndromes, &psi);
    omega.truncate(parity_len);
    // Formal derivative in characteristic 2: odd-degree terms survive.
    let psi_deriv: Vec<u8> =
        (1..psi.len()).map(|d| if d % 2 == 1 { psi[d] } else { 0 }).collect();

    let mut corrected = received.to_vec();
    for &p in &errata_pos {
        let x_p = code.loc(p);
        let x_inv = f.inv(x_p).expect("nonzero");
        let denom = poly_eval_low_first(f, &psi_deriv, x_inv);
        if denom == 0 {
            return Ok(RsDecodeResult::failure(f_count));
        }
        let num = poly_eval_low_first(f, &omega, x_inv);
        // X_p^(1−fcr) = α^((1−fcr)·(n−1−p)); the exponent collapses to 0
        // for the fcr = 1 convention used throughout.
        let fcr_factor = f.alpha_pow((1 - code.fcr as i64) * (code.n as i64 - 1 - p as i64));
        let y = f.mul(fcr_factor, f.div(num, denom)?);
        corrected[p] ^= y;
    }

    // Re-verify: the corrected word must have all-zero syndromes.
    for j in 0..parity_len {
        if code.eval_received(&corrected, f.alpha_pow((code.fcr + j) as i64)) != 0 {
            return Ok(RsDecodeResult::failure(f_count));
        }
    }

    let erased: std::collections::HashSet<usize> = erasures.positions().iter().copied().collect();
    let errors_found = errata_pos
        .iter()
        .filter(|&&p| !erased.contains(&p) && corrected[p] != received[p])
        .count();
    Ok(RsDecodeResult {
        outcome: RsOutcome::Success,
        corrected,
        errors_found,
        erasures_used: f_count,
    })
}

/// Estimate of the probability that a word beyond capability nonetheless
/// lands inside some decoding sphere and mis-corrects: with f erasures and
/// radius e = ⌊(n−k−f)/2⌋, the covered fraction of the punctured
/// (n−f)-symbol space is Σ_{i=0..e} C(n−f, i)·(q−1)^i / q^(n−k−f).
pub fn miscorrection_estimate(code: &RsCode, f_count: usize) -> f64 {
    assert!(f_count <= code.parity_len(), "erasures exceed parity budget");
    let n = code.n as f64;
    let q = code.field.size() as f64;
    let e = (code.parity_len() - f_count) / 2;
    let mut sum = 0.0;
    let mut term = 1.0; // C(n−f, 0)·(q−1)^0
    let nf = n - f_count as f64;
    for i in 0..=e {
        if i > 0 {
            term *= (nf - (i as f64 - 1.0)) / i as f64 * (q - 1.0);
        }
        sum += term;
    }
    sum / q.powi((code.parity_len() - f_count) as i32)
}

/// Additional mis-correction suppression from a 16-bit frame check:
/// a mis-corrected frame passes the CRC with probability 2^(−16).
pub const CRC16_ACCEPT_FACTOR: f64 = 1.0 / 65536.0;

/// Polynomial product, coefficients low-degree first.
fn poly_mul(f: &Field, a: &[u8], b: &[u8]) -> Vec<u8> {
    let mut out = vec![0u8; a.len() + b.len() - 1];
    for (i, &ai) in a.iter().enumerate() {
        if ai == 0 {
            continue;
        }
        for (j, &bj) in b.iter().enumerate() {
            out[i + j] ^= f.mul(ai, bj);
        }
    }
    out
}

/// Horner evaluation for low-degree-first coefficients.
fn poly_eval_low_first(f: &Field, poly: &[u8], x: u8) -> u8 {
    poly.iter().rev().fold(0u8, |acc, &c| f.mul(acc, x) ^ c)
}

/// Berlekamp-Massey over the given syndrome sequence. Returns the minimal
/// LFSR connection polynomial Λ (low-first, Λ[0] = 1), or None when the
/// internal length bookkeeping and final degree disagree — a beyond-
/// capability signature.
fn berlekamp_massey(f: &Field, syndromes: &[u8]) -> Option<Vec<u8>> {
    let mut lambda = vec![1u8];
    let mut prev = vec![1u8];
    let mut l = 0usize;
    let mut m = 1usize;
    let mut b = 1u8;
    for i in 0..syndromes.len() {
        let mut delta = syndromes[i];
        for j in 1..=l.min(lambda.len() - 1) {
            delta ^= f.mul(lambda[j], syndromes[i - j]);
        }
        if delta == 0 {
            m += 1;
        } else if 2 * l <= i {
            let t = lambda.clone();
            let scale = f.div(delta, b).expect("b nonzero");
            lambda = poly_sub_shifted(f, &lambda, &prev, scale, m);
            l = i + 1 - l;
            prev = t;
            b = delta;
            m = 1;
        } else {
            let scale = f.div(delta, b).expect("b nonzero");
            lambda = poly_sub_shifted(f, &lambda, &prev, scale, m);
            m += 1;
        }
    }
    // Trim trailing zeros and check the register length is consistent.
    while lambda.len() > 1 && *lambda.last().unwrap() == 0 {
        lambda.pop();
    }
    (lambda.len() - 1 == l).then_some(lambda)
}

/// lambda − scale·x^shift·prev (char-2 subtraction = XOR).
fn poly_sub_shifted(f: &Field, lambda: &[u8], prev: &[u8], scale: u8, shift: usize) -> Vec<u8> {
    let mut out = lambda.to_vec();
    let needed = prev.len() + shift;
    if out.len() < needed {
        out.resize(needed, 0);
    }
    for (d, &p) in prev.iter().enumerate() {
        out[d + shift] ^= f.mul(scale, p);
    }
    out
}
