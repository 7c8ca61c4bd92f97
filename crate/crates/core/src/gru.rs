//! Gated recurrent unit without bias terms.
//!
//! ```text
//! z_t  = σ(W_z x_t + U_z h_{t-1})
//! r_t  = σ(W_r x_t + U_r h_{t-1})
//! h̃_t  = tanh(W x_t + U (r_t ⊙ h_{t-1}))
//! h_t  = z_t ⊙ h_{t-1} + (1 - z_t) ⊙ h̃_t
//! ```
//!
//! The update gate weights the *previous* state, so a saturated `z_t = 1`
//! copies `h_{t-1}` through unchanged.

use rand::Rng;

use crate::error::{Error, Result};
use crate::numerics::{hadamard, sigmoid, tanh_vec, Matrix, Vector};

#[derive(Clone, Debug, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    /// Left to right.
    Forward,
    /// Right to left.
    Backward,
}

impl Direction {
    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Forward => "forward",
            Direction::Backward => "backward",
        }
    }
}

/// The six weight matrices of one GRU cell.
#[derive(Clone, Debug, PartialEq)]
pub struct GruParams {
    pub w_z: Matrix,
    pub u_z: Matrix,
    pub w_r: Matrix,
    pub u_r: Matrix,
    pub w: Matrix,
    pub u: Matrix,
}

/// Everything the backward pass needs from one forward step.
#[derive(Clone, Debug, PartialEq)]
pub struct GruStepCache {
    pub x_t: Vector,
    pub h_prev: Vector,
    pub z_t: Vector,
    pub r_t: Vector,
    pub h_tilde: Vector,
    pub h_t: Vector,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GruGrads {
    /// Gradients for each weight matrix, in the same layout as the cell.
    pub params: GruParams,
    pub d_x_t: Vector,
    pub d_h_prev: Vector,
}

impl GruParams {
    pub fn zeros(input_dim: usize, hidden_dim: usize) -> Self {
        let wx = || Matrix::zeros(hidden_dim, input_dim);
        let uh = || Matrix::zeros(hidden_dim, hidden_dim);
        GruParams {
            w_z: wx(),
            u_z: uh(),
            w_r: wx(),
            u_r: uh(),
            w: wx(),
            u: uh(),
        }
    }

    /// All weights drawn from `uniform(-scale, scale)`, in `named()` order.
    pub fn random(input_dim: usize, hidden_dim: usize, scale: f64, rng: &mut impl Rng) -> Self {
        let mut p = GruParams::zeros(input_dim, hidden_dim);
        for (_, m) in p.named_mut() {
            for x in m.as_mut_slice() {
                *x = rng.random_range(-scale..=scale);
            }
        }
        p
    }

    pub fn input_dim(&self) -> usize {
        self.w_z.cols()
    }

    pub fn hidden_dim(&self) -> usize {
        self.w_z.rows()
    }

    pub fn named(&self) -> [(&'static str, &Matrix); 6] {
        [
            ("w_z", &self.w_z),
            ("u_z", &self.u_z),
            ("w_r", &self.w_r),
            ("u_r", &self.u_r),
            ("w", &self.w),
            ("u", &self.u),
        ]
    }

    pub fn named_mut(&mut self) -> [(&'static str, &mut Matrix); 6] {
        [
            ("w_z", &mut self.w_z),
            ("u_z", &mut self.u_z),
            ("w_r", &mut self.w_r),
            ("u_r", &mut self.u_r),
            ("w", &mut self.w),
            ("u", &mut self.u),
        ]
    }

    fn check_shapes(&self) -> Result<()> {
        let (h, i) = (self.hidden_dim(), self.input_dim());
        for (name, m) in self.named() {
            let want = if name.starts_with('w') { (h, i) } else { (h, h) };
            if m.shape() != want {
                return Err(Error::shape(
                    "GruParams",
                    format!("{name} {}x{}", want.0, want.1),
                    format!("{}x{}", m.rows(), m.cols()),
                ));
            }
        }
        Ok(())
    }
}

pub fn gru_cell_forward(p: &GruParams, x_t: &Vector, h_prev: &Vector) -> Result<GruStepCache> {
    p.check_shapes()?;
    if x_t.len() != p.input_dim() {
        return Err(Error::shape(
            "gru_cell_forward",
            format!("input of length {}", p.input_dim()),
            format!("length {}", x_t.len()),
        ));
    }
    if h_prev.len() != p.hidden_dim() {
        return Err(Error::shape(
            "gru_cell_forward",
            format!("hidden state of length {}", p.hidden_dim()),
            format!("length {}", h_prev.len()),
        ));
    }

    let z_t = sigmoid(&p.w_z.matvec(x_t)?.add(&p.u_z.matvec(h_prev)?)?);
    let r_t = sigmoid(&p.w_r.matvec(x_t)?.add(&p.u_r.matvec(h_prev)?)?);
    let gated = hadamard(&r_t, h_prev)?;
    let h_tilde = tanh_vec(&p.w.matvec(x_t)?.add(&p.u.matvec(&gated)?)?);
    let h_t = Vector::new(
        z_t.iter()
            .zip(h_prev.iter())
            .zip(h_tilde.iter())
            .map(|((&z, &hp), &ht)| z * hp + (1.0 - z) * ht)
            .collect(),
    );

    Ok(GruStepCache {
        x_t: x_t.clone(),
        h_prev: h_prev.clone(),
        z_t,
        r_t,
        h_tilde,
        h_t,
    })
}

/// Backpropagates `d_h_t` through one step, returning fresh gradients.
pub fn gru_cell_backward(p: &GruParams, cache: &GruStepCache, d_h_t: &Vector) -> Result<GruGrads> {
    let mut params = GruParams::zeros(p.input_dim(), p.hidden_dim());
    let (d_x_t, d_h_prev) = gru_cell_backward_into(p, cache, d_h_t, &mut params)?;
    Ok(GruGrads { params, d_x_t, d_h_prev })
}

/// Like [`gru_cell_backward`] but accumulates weight gradients into `acc`.
/// Returns `(d_x_t, d_h_prev)`.
pub fn gru_cell_backward_into(p: &GruParams, cache: &GruStepCache, d_h_t: &Vector, acc: &mut GruParams) -> Result<(Vector, Vector)> {
    let h = p.hidden_dim();
    if d_h_t.len() != h || cache.h_prev.len() != h || cache.x_t.len() != p.input_dim() {
        return Err(Error::shape(
            "gru_cell_backward",
            format!("hidden {h}, input {}", p.input_dim()),
            format!("d_h_t {}, h_prev {}, x_t {}", d_h_t.len(), cache.h_prev.len(), cache.x_t.len()),
        ));
    }
    if acc.input_dim() != p.input_dim() || acc.hidden_dim() != h {
        return Err(Error::shape(
            "gru_cell_backward",
            format!("{h}x{} accumulator", p.input_dim()),
            format!("{}x{}", acc.hidden_dim(), acc.input_dim()),
        ));
    }

    let GruStepCache {
        x_t,
        h_prev,
        z_t,
        r_t,
        h_tilde,
        ..
    } = cache;

    let mut d_az = Vector::zeros(h);
    let mut d_ah = Vector::zeros(h);
    for i in 0..h {
        let g = d_h_t[i];
        let z = z_t[i];
        d_az[i] = g * (h_prev[i] - h_tilde[i]) * z * (1.0 - z);
        d_ah[i] = g * (1.0 - z) * (1.0 - h_tilde[i] * h_tilde[i]);
    }

    let gated = hadamard(r_t, h_prev)?;
    let d_gated = p.u.matvec_transposed(&d_ah)?;
    let mut d_ar = Vector::zeros(h);
    for i in 0..h {
        let r = r_t[i];
        d_ar[i] = d_gated[i] * h_prev[i] * r * (1.0 - r);
    }

    acc.w_z.add_outer(1.0, &d_az, x_t)?;
    acc.u_z.add_outer(1.0, &d_az, h_prev)?;
    acc.w_r.add_outer(1.0, &d_ar, x_t)?;
    acc.u_r.add_outer(1.0, &d_ar, h_prev)?;
    acc.w.add_outer(1.0, &d_ah, x_t)?;
    acc.u.add_outer(1.0, &d_ah, &gated)?;

    let mut d_x_t = p.w_z.matvec_transposed(&d_az)?;
    d_x_t.axpy(1.0, &p.w_r.matvec_transposed(&d_ar)?)?;
    d_x_t.axpy(1.0, &p.w.matvec_transposed(&d_ah)?)?;

    let mut d_h_prev = hadamard(d_h_t, z_t)?;
    d_h_prev.axpy(1.0, &p.u_z.matvec_transposed(&d_az)?)?;
    d_h_prev.axpy(1.0, &p.u_r.matvec_transposed(&d_ar)?)?;
    d_h_prev.axpy(1.0, &hadamard(&d_gated, r_t)?)?;

    Ok((d_x_t, d_h_prev))
}

/// Unrolls the cell over `inputs`. A backward run consumes the inputs
/// last-to-first; caches are returned in consumption order.
pub fn gru_run_sequence(p: &GruParams, inputs: &[Vector], h0: &Vector, direction: Direction) -> Result<Vec<GruStepCache>> {
    let order: Box<dyn Iterator<Item = &Vector>> = match direction {
        Direction::Forward => Box::new(inputs.iter()),
        Direction::Backward => Box::new(inputs.iter().rev()),
    };
    let mut caches = Vec::with_capacity(inputs.len());
    let mut h = h0.clone();
    for x in order {
        let cache = gru_cell_forward(p, x, &h)?;
        h = cache.h_t.clone();
        caches.push(cache);
    }
    Ok(caches)
}
