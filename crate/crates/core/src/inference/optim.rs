use crate::tensor::Tensor;

/// Adam with bias correction.
#[derive(Debug, Clone)]
pub struct Adam {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    t: i32,
    m: Vec<Tensor>,
    v: Vec<Tensor>,
}

impl Adam {
    pub fn new<'a>(params: impl Iterator<Item = &'a Tensor>) -> Self {
        let m: Vec<Tensor> = params.map(|p| Tensor::zeros(p.shape())).collect();
        Self {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            t: 0,
            v: m.clone(),
            m,
        }
    }

    pub fn step<'a>(
        &mut self,
        params: impl Iterator<Item = &'a mut Tensor>,
        grads: &[Tensor],
        lr: f64,
    ) {
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t);
        let bc2 = 1.0 - self.beta2.powi(self.t);
        let mut n = 0;
        for (((p, g), m), v) in params.zip(grads).zip(&mut self.m).zip(&mut self.v) {
            debug_assert!(p.same_shape(g));
            for (((pv, &gv), mv), vv) in p
                .data_mut()
                .iter_mut()
                .zip(g.data())
                .zip(m.data_mut())
                .zip(v.data_mut())
            {
                *mv = self.beta1 * *mv + (1.0 - self.beta1) * gv;
                *vv = self.beta2 * *vv + (1.0 - self.beta2) * gv * gv;
                let mhat = *mv / bc1;
                let vhat = *vv / bc2;
                *pv -= lr * mhat / (vhat.sqrt() + self.eps);
            }
            n += 1;
        }
        debug_assert_eq!(n, self.m.len());
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_step_moves_by_lr_against_gradient_sign() {
        let mut p = [Tensor::vector(vec![1.0, -1.0]).unwrap()];
        let mut opt = Adam::new(p.iter());
        let g = vec![Tensor::vector(vec![0.5, -3.0]).unwrap()];
        opt.step(p.iter_mut(), &g, 0.1);
        // bias-corrected first step is lr · sign(g) up to eps
        assert!((p[0].data()[0] - 0.9).abs() < 1e-6);
        assert!((p[0].data()[1] + 0.9).abs() < 1e-6);
    }

    #[test]
    fn minimises_a_quadratic() {
        let mut p = [Tensor::vector(vec![3.0]).unwrap()];
        let mut opt = Adam::new(p.iter());
        for _ in 0..2000 {
            let g = vec![p[0].map(|w| 2.0 * (w - 1.0))];
            opt.step(p.iter_mut(), &g, 0.01);
        }
        assert!((p[0].data()[0] - 1.0).abs() < 1e-3);
    }
}
