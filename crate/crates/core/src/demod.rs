//! Forward/backward message passing over the CPM trellis.

use crate::cpm::{CpmTrellis, TiltTable, WaveformTable};
use crate::equalizer::{OpCounter, WaveformPriors};
use crate::error::{check_len, Result};
use crate::framing::IntrafixConstraints;
use crate::num::{normalize_log, Cplx, LogSum, Real};

/// Forward and backward state messages of one pass.
///
/// `forward` row `n` is the message on the state entering symbol `n`;
/// `backward` row `n + 1` is the message on the state leaving it. Both have
/// `len + 1` rows of `num_states` log values.
#[derive(Debug, Clone, PartialEq)]
pub struct StateMessages<T> {
    pub len: usize,
    pub num_states: usize,
    pub forward: Vec<T>,
    pub backward: Vec<T>,
}

impl<T: Real> StateMessages<T> {
    pub fn forward_row(&self, n: usize) -> &[T] {
        &self.forward[n * self.num_states..(n + 1) * self.num_states]
    }

    pub fn backward_row(&self, n: usize) -> &[T] {
        &self.backward[n * self.num_states..(n + 1) * self.num_states]
    }
}

/// Trellis demodulator bound to a waveform bank.
#[derive(Debug, Clone, Copy)]
pub struct Demodulator<'a, T> {
    pub trellis: &'a CpmTrellis,
    pub table: &'a WaveformTable<T>,
    pub tilt: &'a TiltTable<T>,
    pub log_sum: LogSum,
    /// State entering the first symbol; `None` starts from a uniform message.
    pub initial_state: Option<usize>,
}

impl<'a, T: Real> Demodulator<'a, T> {
    pub fn new(trellis: &'a CpmTrellis, table: &'a WaveformTable<T>, tilt: &'a TiltTable<T>) -> Self {
        Self {
            trellis,
            table,
            tilt,
            log_sum: LogSum::Exact,
            initial_state: Some(crate::framing::REFERENCE_STATE),
        }
    }

    fn branches(&self) -> usize {
        self.trellis.num_branches()
    }

    /// `γ_n(l) = −Σ_i |q_n^i e^{jψ_n^i} − χ_l^i|² / τ_q`, `Ñ × branches`.
    pub fn branch_metrics(&self, q: &[Cplx<T>], tau_q: T, ops: &mut OpCounter) -> Result<Vec<T>> {
        let kappa = self.table.samples_per_symbol();
        if q.len() % kappa != 0 {
            return Err(crate::Error::LengthMismatch {
                what: "pseudo-observations",
                expected: q.len().div_ceil(kappa) * kappa,
                actual: q.len(),
            });
        }
        let symbols = q.len() / kappa;
        let nb = self.branches();
        let inv = T::one() / tau_q;
        let mut gamma = vec![T::zero(); symbols * nb];
        let mut rotated = vec![Cplx::new(T::zero(), T::zero()); kappa];
        for n in 0..symbols {
            for i in 0..kappa {
                rotated[i] = q[n * kappa + i] * self.tilt.phasor(n * kappa + i);
            }
            for (l, g) in gamma[n * nb..(n + 1) * nb].iter_mut().enumerate() {
                let d: T = self
                    .table
                    .row(l)
                    .iter()
                    .zip(&rotated)
                    .map(|(&c, &r)| (r - c).norm_sqr())
                    .sum();
                *g = -d * inv;
            }
        }
        ops.demod += (symbols * nb * kappa * 8) as u64;
        Ok(gamma)
    }

    /// Effective log prior of branch `(state, input)` at position `n`.
    #[inline]
    fn prior(&self, priors: &[T], constraints: &IntrafixConstraints, n: usize, s: usize, a: usize) -> T {
        if constraints.allows(n, s, a) {
            priors[n * self.trellis.order() + a]
        } else {
            T::neg_infinity()
        }
    }

    /// Forward and backward recursions. `priors` holds `ln P(α̃_n = a)`,
    /// `order` values per symbol.
    pub fn run(
        &self,
        gamma: &[T],
        priors: &[T],
        constraints: &IntrafixConstraints,
        ops: &mut OpCounter,
    ) -> Result<StateMessages<T>> {
        let ns = self.trellis.num_states();
        let m = self.trellis.order();
        let nb = self.branches();
        let len = gamma.len() / nb;
        check_len("branch metrics", len * nb, gamma.len())?;
        check_len("symbol priors", len * m, priors.len())?;
        check_len("intrafix constraints", len, constraints.len())?;
        let ninf = T::neg_infinity();

        let mut forward = vec![ninf; (len + 1) * ns];
        match self.initial_state {
            Some(s) => forward[s] = T::zero(),
            None => forward[..ns].fill(-T::count(ns).ln()),
        }
        let mut terms = Vec::with_capacity(ns.max(m));
        for n in 0..len {
            let (cur, nxt) = forward.split_at_mut((n + 1) * ns);
            let cur = &cur[n * ns..];
            let nxt = &mut nxt[..ns];
            for (to, slot) in nxt.iter_mut().enumerate() {
                terms.clear();
                terms.extend(self.trellis.incoming(to).iter().map(|&(from, a)| {
                    cur[from] + gamma[n * nb + self.trellis.branch(from, a)]
                        + self.prior(priors, constraints, n, from, a)
                }));
                *slot = self.log_sum.reduce(&terms);
            }
            normalize_log(nxt);
        }

        let mut backward = vec![ninf; (len + 1) * ns];
        backward[len * ns..].fill(-T::count(ns).ln());
        for n in (0..len).rev() {
            let (cur, nxt) = backward.split_at_mut((n + 1) * ns);
            let cur = &mut cur[n * ns..];
            let nxt = &nxt[..ns];
            for (from, slot) in cur.iter_mut().enumerate() {
                terms.clear();
                terms.extend((0..m).map(|a| {
                    nxt[self.trellis.next_state(from, a)]
                        + gamma[n * nb + self.trellis.branch(from, a)]
                        + self.prior(priors, constraints, n, from, a)
                }));
                *slot = self.log_sum.reduce(&terms);
            }
            normalize_log(cur);
        }
        ops.demod += (2 * len * nb * 4) as u64;
        Ok(StateMessages {
            len,
            num_states: ns,
            forward,
            backward,
        })
    }

    /// Extrinsic symbol messages `m(α̃_n)`: the symbol's own prior is left
    /// out. Rows are normalised log values, `order` per symbol.
    pub fn symbol_output(
        &self,
        msgs: &StateMessages<T>,
        gamma: &[T],
        constraints: &IntrafixConstraints,
        ops: &mut OpCounter,
    ) -> Result<Vec<T>> {
        let m = self.trellis.order();
        let nb = self.branches();
        let len = msgs.len;
        check_len("branch metrics", len * nb, gamma.len())?;
        let ns = msgs.num_states;
        let mut out = vec![T::neg_infinity(); len * m];
        let mut terms = Vec::with_capacity(ns);
        for n in 0..len {
            let fw = msgs.forward_row(n);
            let bw = msgs.backward_row(n + 1);
            let row = &mut out[n * m..(n + 1) * m];
            for (a, slot) in row.iter_mut().enumerate() {
                terms.clear();
                terms.extend(
                    fw.iter()
                        .enumerate()
                        .filter(|&(s, &f)| f != T::neg_infinity() && constraints.allows(n, s, a))
                        .map(|(s, &f)| {
                            f + gamma[n * nb + self.trellis.branch(s, a)] + bw[self.trellis.next_state(s, a)]
                        }),
                );
                *slot = self.log_sum.reduce(&terms);
            }
            normalize_log(row);
        }
        ops.demod += (len * nb * 3) as u64;
        Ok(out)
    }

    /// Waveform priors `log Pᵃ(y_n = χ_l) = fw_n(s) + bw_{n+1}(s') + π_n(s, a)`,
    /// unnormalised, for the equalizer's belief step.
    pub fn waveform_priors(
        &self,
        msgs: &StateMessages<T>,
        priors: &[T],
        constraints: &IntrafixConstraints,
        ops: &mut OpCounter,
    ) -> Result<WaveformPriors<T>> {
        let m = self.trellis.order();
        let nb = self.branches();
        let len = msgs.len;
        check_len("symbol priors", len * m, priors.len())?;
        let mut out = WaveformPriors::uniform(len, nb);
        for n in 0..len {
            let fw = msgs.forward_row(n);
            let bw = msgs.backward_row(n + 1);
            let row = out.row_mut(n);
            for (s, &f) in fw.iter().enumerate() {
                for a in 0..m {
                    let to = self.trellis.next_state(s, a);
                    row[self.trellis.branch(s, a)] =
                        f + bw[to] + self.prior(priors, constraints, n, s, a);
                }
            }
        }
        ops.demod += (len * nb * 2) as u64;
        Ok(out)
    }

    /// Per-sample mean message `e^{−jψ} Σ_l χ_l^i P(y_n = χ_l)` with the
    /// waveform priors normalised per symbol.
    pub fn mean_messages(&self, priors: &WaveformPriors<T>) -> Vec<Cplx<T>> {
        let kappa = self.table.samples_per_symbol();
        let mut out = Vec::with_capacity(priors.symbols() * kappa);
        let mut row = vec![T::zero(); priors.num_rows];
        for n in 0..priors.symbols() {
            row.copy_from_slice(priors.row(n));
            normalize_log(&mut row);
            for i in 0..kappa {
                let mean = row
                    .iter()
                    .enumerate()
                    .filter(|(_, &p)| p > T::neg_infinity())
                    .fold(Cplx::new(T::zero(), T::zero()), |acc, (l, &p)| {
                        acc + self.table.sample(l, i) * p.exp()
                    });
                out.push(mean * self.tilt.phasor(n * kappa + i).conj());
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cpm::{CpmConfig, CpmModem};
    use crate::num::log_sum_exp;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    type C = Cplx<f64>;

    struct Setup {
        trellis: CpmTrellis,
        table: WaveformTable<f64>,
        tilt: TiltTable<f64>,
    }

    fn setup(cfg: &CpmConfig) -> Setup {
        let trellis = CpmTrellis::new(cfg).unwrap();
        Setup {
            table: WaveformTable::new(&trellis),
            tilt: TiltTable::new(cfg),
            trellis,
        }
    }

    /// Enumerates every input sequence from state 0 and returns per-symbol
    /// posterior marginals and state marginals (linear domain).
    fn brute_force(
        trellis: &CpmTrellis,
        gamma: &[f64],
        priors: &[f64],
        len: usize,
    ) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        let m = trellis.order();
        let nb = trellis.num_branches();
        let mut sym = vec![vec![0.0; m]; len];
        let mut states = vec![vec![0.0; trellis.num_states()]; len + 1];
        for word in 0..m.pow(len as u32) {
            let inputs: Vec<usize> = (0..len).map(|n| (word / m.pow(n as u32)) % m).collect();
            let mut s = 0;
            let mut path = vec![0];
            let mut logw = 0.0;
            for (n, &a) in inputs.iter().enumerate() {
                logw += gamma[n * nb + trellis.branch(s, a)] + priors[n * m + a];
                s = trellis.next_state(s, a);
                path.push(s);
            }
            let w = logw.exp();
            for (n, &a) in inputs.iter().enumerate() {
                sym[n][a] += w;
            }
            for (n, &st) in path.iter().enumerate() {
                states[n][st] += w;
            }
        }
        (sym, states)
    }

    fn random_inputs(rng: &mut impl Rng, len: usize, nb: usize, m: usize) -> (Vec<f64>, Vec<f64>) {
        let gamma = (0..len * nb).map(|_| -rng.random_range(0.0..3.0)).collect();
        let mut priors: Vec<f64> = (0..len * m).map(|_| rng.random_range(-2.0..0.0)).collect();
        for row in priors.chunks_mut(m) {
            normalize_log(row);
        }
        (gamma, priors)
    }

    #[test]
    fn msk_state_marginals_match_enumeration() {
        let st = setup(&CpmConfig::msk(2));
        let demod = Demodulator::new(&st.trellis, &st.table, &st.tilt);
        let len = 6;
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (gamma, priors) = random_inputs(&mut rng, len, st.trellis.num_branches(), 2);
        let cons = IntrafixConstraints::free(len);
        let mut ops = OpCounter::default();
        let msgs = demod.run(&gamma, &priors, &cons, &mut ops).unwrap();
        let (_, states) = brute_force(&st.trellis, &gamma, &priors, len);
        for n in 0..=len {
            let mut joint: Vec<f64> = msgs
                .forward_row(n)
                .iter()
                .zip(msgs.backward_row(n))
                .map(|(a, b)| a + b)
                .collect();
            normalize_log(&mut joint);
            let z: f64 = states[n].iter().sum();
            for (s, &v) in joint.iter().enumerate() {
                assert!((v.exp() - states[n][s] / z).abs() < 1e-9, "n={n} s={s}");
            }
        }
    }

    #[test]
    fn symbol_output_is_extrinsic_marginal() {
        let cfg = CpmConfig::new(4, 2, 1, 3, crate::cpm::PulseShape::Rc, 2).unwrap();
        let st = setup(&cfg);
        let demod = Demodulator::new(&st.trellis, &st.table, &st.tilt);
        let len = 4;
        let m = 4;
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let (gamma, priors) = random_inputs(&mut rng, len, st.trellis.num_branches(), m);
        let cons = IntrafixConstraints::free(len);
        let mut ops = OpCounter::default();
        let msgs = demod.run(&gamma, &priors, &cons, &mut ops).unwrap();
        let out = demod.symbol_output(&msgs, &gamma, &cons, &mut ops).unwrap();
        let (sym, _) = brute_force(&st.trellis, &gamma, &priors, len);
        for n in 0..len {
            let mut expect: Vec<f64> = (0..m).map(|a| sym[n][a].ln() - priors[n * m + a]).collect();
            normalize_log(&mut expect);
            for a in 0..m {
                assert!((out[n * m + a] - expect[a]).abs() < 1e-9);
            }
            assert!((log_sum_exp(&out[n * m..(n + 1) * m])).abs() < 1e-12);
        }
    }

    #[test]
    fn own_prior_does_not_change_symbol_output() {
        let st = setup(&CpmConfig::quaternary_2rc());
        let demod = Demodulator::new(&st.trellis, &st.table, &st.tilt);
        let len = 10;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (gamma, priors) = random_inputs(&mut rng, len, st.trellis.num_branches(), 4);
        let cons = IntrafixConstraints::free(len);
        let mut ops = OpCounter::default();
        let base = demod
            .symbol_output(&demod.run(&gamma, &priors, &cons, &mut ops).unwrap(), &gamma, &cons, &mut ops)
            .unwrap();
        let mut scaled = priors.clone();
        for v in &mut scaled[5 * 4..6 * 4] {
            *v += 3.7;
        }
        let other = demod
            .symbol_output(&demod.run(&gamma, &scaled, &cons, &mut ops).unwrap(), &gamma, &cons, &mut ops)
            .unwrap();
        for (a, b) in base.iter().zip(&other) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn waveform_priors_are_branch_posteriors_without_own_metric() {
        let st = setup(&CpmConfig::msk(2));
        let demod = Demodulator::new(&st.trellis, &st.table, &st.tilt);
        let len = 6;
        let nb = st.trellis.num_branches();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let (gamma, priors) = random_inputs(&mut rng, len, nb, 2);
        let cons = IntrafixConstraints::free(len);
        let mut ops = OpCounter::default();
        let msgs = demod.run(&gamma, &priors, &cons, &mut ops).unwrap();
        let pa = demod.waveform_priors(&msgs, &priors, &cons, &mut ops).unwrap();
        for n in 0..len {
            let mut masked = gamma.clone();
            masked[n * nb..(n + 1) * nb].fill(0.0);
            // branch posterior with symbol n's metric removed
            let mut post = vec![0.0; nb];
            for word in 0..1usize << len {
                let mut s = 0;
                let mut logw = 0.0;
                let mut hit = 0;
                for k in 0..len {
                    let a = (word >> k) & 1;
                    if k == n {
                        hit = st.trellis.branch(s, a);
                    }
                    logw += masked[k * nb + st.trellis.branch(s, a)] + priors[k * 2 + a];
                    s = st.trellis.next_state(s, a);
                }
                post[hit] += logw.exp();
            }
            let ratios: Vec<f64> = (0..nb)
                .filter(|&l| post[l] > 0.0)
                .map(|l| pa.row(n)[l] - post[l].ln())
                .collect();
            for r in &ratios {
                assert!((r - ratios[0]).abs() < 1e-9);
            }
            for l in (0..nb).filter(|&l| post[l] == 0.0) {
                assert_eq!(pa.row(n)[l], f64::NEG_INFINITY);
            }
        }
    }

    #[test]
    fn uniform_inputs_give_uniform_messages() {
        let st = setup(&CpmConfig::quaternary_2rc());
        let mut demod = Demodulator::new(&st.trellis, &st.table, &st.tilt);
        demod.initial_state = None;
        let len = 8;
        let gamma = vec![0.0; len * st.trellis.num_branches()];
        let priors = vec![-(4f64.ln()); len * 4];
        let cons = IntrafixConstraints::free(len);
        let mut ops = OpCounter::default();
        let msgs = demod.run(&gamma, &priors, &cons, &mut ops).unwrap();
        let u = -(12f64.ln());
        assert!(msgs.forward.iter().chain(&msgs.backward).all(|v| (v - u).abs() < 1e-12));
        let out = demod.symbol_output(&msgs, &gamma, &cons, &mut ops).unwrap();
        assert!(out.iter().all(|v| (v + 4f64.ln()).abs() < 1e-12));
        let pa = demod.waveform_priors(&msgs, &priors, &cons, &mut ops).unwrap();
        let first = pa.log_prior[0];
        assert!(pa.log_prior.iter().all(|v| (v - first).abs() < 1e-12));
    }

    #[test]
    fn noiseless_path_is_recovered() {
        let cfg = CpmConfig::quaternary_2rc();
        let st = setup(&cfg);
        let demod = Demodulator::new(&st.trellis, &st.table, &st.tilt);
        let modem = CpmModem::<f64>::new(&cfg).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let inputs: Vec<usize> = (0..30).map(|_| rng.random_range(0..4)).collect();
        let syms: Vec<i32> = inputs.iter().map(|&a| cfg.symbol(a)).collect();
        let (x, _) = modem.modulate(&syms, 0).unwrap();
        let mut ops = OpCounter::default();
        let gamma = demod.branch_metrics(&x, 0.05, &mut ops).unwrap();
        let priors = vec![-(4f64.ln()); 30 * 4];
        let cons = IntrafixConstraints::free(30);
        let msgs = demod.run(&gamma, &priors, &cons, &mut ops).unwrap();
        let out = demod.symbol_output(&msgs, &gamma, &cons, &mut ops).unwrap();
        for (n, &a) in inputs.iter().enumerate() {
            let row = &out[n * 4..(n + 1) * 4];
            let best = (0..4).max_by(|&i, &j| row[i].total_cmp(&row[j])).unwrap();
            assert_eq!(best, a);
            if n + 1 < inputs.len() {
                assert!(row[a] > 0.99f64.ln(), "symbol {n}: {}", row[a].exp());
            }
        }
        // the true branch has zero metric
        let mut s = 0;
        for (n, &a) in inputs.iter().enumerate() {
            assert!(gamma[n * 48 + st.trellis.branch(s, a)].abs() < 1e-9);
            s = st.trellis.next_state(s, a);
        }
    }

    #[test]
    fn branch_metric_direct_formula() {
        let cfg = CpmConfig::quaternary_2rc();
        let st = setup(&cfg);
        let demod = Demodulator::new(&st.trellis, &st.table, &st.tilt);
        let q = vec![C::new(0.3, -0.4), C::new(-0.1, 0.9), C::new(0.5, 0.5), C::new(0.0, -1.0)];
        let mut ops = OpCounter::default();
        let gamma = demod.branch_metrics(&q, 0.7, &mut ops).unwrap();
        let l = 17;
        let mut d = 0.0;
        for i in 0..2 {
            let r = q[2 + i] * st.tilt.phasor(2 + i);
            d += (r - st.table.sample(l, i)).norm_sqr();
        }
        assert!((gamma[48 + l] + d / 0.7).abs() < 1e-12);
        let flat = demod.branch_metrics(&q, 1e15, &mut ops).unwrap();
        assert!(flat.iter().all(|g| g.abs() < 1e-12));
    }

    #[test]
    fn delta_prior_mean_message() {
        let st = setup(&CpmConfig::quaternary_2rc());
        let demod = Demodulator::new(&st.trellis, &st.table, &st.tilt);
        let mut pa = WaveformPriors::uniform(2, 48);
        pa.row_mut(1).fill(f64::NEG_INFINITY);
        pa.row_mut(1)[30] = -5.0;
        let mean = demod.mean_messages(&pa);
        for i in 0..2 {
            let expect = st.table.sample(30, i) * st.tilt.phasor(2 + i).conj();
            assert!((mean[2 + i] - expect).norm() < 1e-12);
        }
    }

    #[test]
    fn max_log_picks_best_path() {
        let st = setup(&CpmConfig::msk(1));
        let mut demod = Demodulator::new(&st.trellis, &st.table, &st.tilt);
        demod.log_sum = LogSum::MaxLog;
        let len = 5;
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let (gamma, priors) = random_inputs(&mut rng, len, st.trellis.num_branches(), 2);
        let cons = IntrafixConstraints::free(len);
        let mut ops = OpCounter::default();
        let msgs = demod.run(&gamma, &priors, &cons, &mut ops).unwrap();
        let out = demod.symbol_output(&msgs, &gamma, &cons, &mut ops).unwrap();
        // best full path by enumeration
        let mut best = (f64::NEG_INFINITY, 0);
        for word in 0..1usize << len {
            let mut s = 0;
            let mut w = 0.0;
            for k in 0..len {
                let a = (word >> k) & 1;
                w += gamma[k * 2 * 2 + st.trellis.branch(s, a)] + priors[k * 2 + a];
                s = st.trellis.next_state(s, a);
            }
            if w > best.0 {
                best = (w, word);
            }
        }
        for k in 0..len {
            let a = (best.1 >> k) & 1;
            // the max-log output adds back the prior to reach the path metric
            let row: Vec<f64> = (0..2).map(|b| out[k * 2 + b] + priors[k * 2 + b]).collect();
            assert!(row[a] >= row[1 - a] - 1e-12, "symbol {k}");
        }
    }
}
