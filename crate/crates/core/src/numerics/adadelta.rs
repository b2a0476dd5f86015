use super::{Gradients, ParamId, ParamStore};
use crate::error::{Error, Result};

/// Adadelta with a multiplicative global scale on the applied update.
///
/// Per coordinate, with gradient `g`:
///
/// ```text
/// Eg2  <- rho * Eg2  + (1 - rho) * g^2
/// dx    = -sqrt(Edx2 + eps) / sqrt(Eg2 + eps) * g
/// Edx2 <- rho * Edx2 + (1 - rho) * dx^2
/// x    <- x + lr * dx
/// ```
///
/// Accumulators start at zero and are created lazily per parameter.
#[derive(Clone, Debug)]
pub struct AdadeltaState {
    pub rho: f64,
    pub eps: f64,
    pub lr: f64,
    eg2: Vec<Option<Vec<f64>>>,
    edx2: Vec<Option<Vec<f64>>>,
}

pub const DEFAULT_RHO: f64 = 0.95;
pub const DEFAULT_EPS: f64 = 1e-6;

impl AdadeltaState {
    pub fn new(lr: f64) -> Self {
        Self::with_constants(lr, DEFAULT_RHO, DEFAULT_EPS)
    }

    pub fn with_constants(lr: f64, rho: f64, eps: f64) -> Self {
        AdadeltaState {
            rho,
            eps,
            lr,
            eg2: Vec::new(),
            edx2: Vec::new(),
        }
    }

    pub fn sq_grad_avg(&self, id: ParamId) -> Option<&[f64]> {
        self.eg2.get(id.0).and_then(|v| v.as_deref())
    }

    pub fn sq_update_avg(&self, id: ParamId) -> Option<&[f64]> {
        self.edx2.get(id.0).and_then(|v| v.as_deref())
    }

    /// Updates every parameter in `ids` that received a gradient. Parameters
    /// without one are left alone, accumulators included. Nothing is touched
    /// if any gradient is non-finite.
    pub fn step(&mut self, store: &mut ParamStore, grads: &Gradients, ids: &[ParamId]) -> Result<()> {
        for &id in ids {
            if let Some(g) = grads.param(id) {
                if !g.is_finite() {
                    return Err(Error::Numeric(format!(
                        "non-finite gradient for parameter {}",
                        store.name(id)
                    )));
                }
            }
        }
        for &id in ids {
            let Some(g) = grads.param(id) else { continue };
            if self.eg2.len() <= id.0 {
                self.eg2.resize(id.0 + 1, None);
                self.edx2.resize(id.0 + 1, None);
            }
            let n = g.numel();
            let eg2 = self.eg2[id.0].get_or_insert_with(|| vec![0.0; n]);
            let edx2 = self.edx2[id.0].get_or_insert_with(|| vec![0.0; n]);
            let param = store.get_mut(id).data_mut();
            let (rho, eps, lr) = (self.rho, self.eps, self.lr);
            for (((p, &gv), a), b) in param.iter_mut().zip(g.data()).zip(eg2.iter_mut()).zip(edx2.iter_mut()) {
                if gv == 0.0 && *a == 0.0 {
                    continue;
                }
                *a = rho * *a + (1.0 - rho) * gv * gv;
                let dx = -((*b + eps).sqrt() / (*a + eps).sqrt()) * gv;
                *b = rho * *b + (1.0 - rho) * dx * dx;
                *p += lr * dx;
            }
        }
        Ok(())
    }
}
