use crate::image::{discrete_laplacian, SourceImage};
use crate::sensing::{CsOperator, SensorData};
use crate::{Error, Result};

/// Objective value, with `Infeasible` standing for `+∞` when `f` has a
/// negative entry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Objective {
    Value(f64),
    Infeasible,
}

impl Objective {
    /// The value as a float, `+∞` when infeasible.
    pub fn as_f64(&self) -> f64 {
        match self {
            Objective::Value(v) => *v,
            Objective::Infeasible => f64::INFINITY,
        }
    }

    pub fn is_feasible(&self) -> bool {
        matches!(self, Objective::Value(_))
    }
}

/// Individual terms of `Φ + Ψ` at one iterate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectiveTerms {
    /// `½‖Mf − y‖²`
    pub data_f: f64,
    /// `½‖Mh − y''‖²`
    pub data_h: f64,
    /// `(α/2)‖Δf − h/c²‖²`
    pub coupling: f64,
    /// `β‖h‖₁`
    pub l1: f64,
    pub feasible: bool,
}

impl ObjectiveTerms {
    pub fn smooth(&self) -> f64 {
        self.data_f + self.data_h + self.coupling
    }

    pub fn objective(&self) -> Objective {
        if self.feasible {
            Objective::Value(self.smooth() + self.l1)
        } else {
            Objective::Infeasible
        }
    }
}

/// Data and operators of the joint problem
/// `min ½‖Mf − y‖² + ½‖Mh − y''‖² + (α/2)‖Δf − h/c²‖² + β‖h‖₁ + I_{f ≥ 0}`.
#[derive(Debug, Clone)]
pub struct JointProblem<'a> {
    op: &'a CsOperator,
    y: &'a SensorData,
    y_tt: &'a SensorData,
    inv_c2: SourceImage,
    alpha: f64,
    beta: f64,
}

/// Residuals of one iterate, reused by the objective and the gradient.
#[derive(Debug, Clone)]
pub struct Residuals {
    pub data_f: SensorData,
    pub data_h: SensorData,
    pub coupling: SourceImage,
}

/// Relative floor applied to the sound speed before forming `1/c²`.
pub const SOUND_SPEED_FLOOR: f64 = 1e-6;

impl<'a> JointProblem<'a> {
    pub fn new(
        op: &'a CsOperator,
        y: &'a SensorData,
        y_tt: &'a SensorData,
        sound_speed: &SourceImage,
        alpha: f64,
        beta: f64,
    ) -> Result<Self> {
        if !(alpha >= 0.0 && alpha.is_finite()) {
            return Err(Error::Config(format!("alpha must be >= 0, got {alpha}")));
        }
        if !(beta >= 0.0 && beta.is_finite()) {
            return Err(Error::Config(format!("beta must be >= 0, got {beta}")));
        }
        let expected = SensorData::zeros(op.matrix().m(), *op.time_axis());
        expected.same_shape(y)?;
        expected.same_shape(y_tt)?;
        if sound_speed.grid() != op.wave().grid() {
            return Err(Error::shape(
                format!("{:?}", op.wave().grid().shape()),
                format!("{:?}", sound_speed.grid().shape()),
            ));
        }
        let floor = SOUND_SPEED_FLOOR * sound_speed.max();
        let inv_c2 = sound_speed.map(|c| {
            let c = c.max(floor);
            1.0 / (c * c)
        });
        Ok(Self {
            op,
            y,
            y_tt,
            inv_c2,
            alpha,
            beta,
        })
    }

    pub fn operator(&self) -> &CsOperator {
        self.op
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// `1/c²` after flooring `c`.
    pub fn inv_c2(&self) -> &SourceImage {
        &self.inv_c2
    }

    /// `h/c²`.
    pub fn weight(&self, h: &SourceImage) -> SourceImage {
        let mut out = h.clone();
        for (o, w) in out.as_slice_mut().iter_mut().zip(self.inv_c2.as_slice()) {
            *o *= w;
        }
        out
    }

    pub fn residuals(&self, f: &SourceImage, h: &SourceImage) -> Result<Residuals> {
        f.same_shape(&self.inv_c2)?;
        h.same_shape(&self.inv_c2)?;
        let data_f = self.op.forward(f)?.lincomb(1.0, self.y, -1.0);
        let data_h = self.op.forward(h)?.lincomb(1.0, self.y_tt, -1.0);
        let coupling = discrete_laplacian(f).lincomb(1.0, &self.weight(h), -1.0);
        Ok(Residuals {
            data_f,
            data_h,
            coupling,
        })
    }

    pub fn terms_from(&self, f: &SourceImage, h: &SourceImage, r: &Residuals) -> ObjectiveTerms {
        let sq = |v: f64| v * v;
        ObjectiveTerms {
            data_f: 0.5 * sq(r.data_f.norm()),
            data_h: 0.5 * sq(r.data_h.norm()),
            coupling: 0.5 * self.alpha * sq(r.coupling.norm()),
            l1: self.beta * h.as_slice().iter().map(|v| v.abs()).sum::<f64>(),
            feasible: f.as_slice().iter().all(|&v| v >= 0.0),
        }
    }

    pub fn terms(&self, f: &SourceImage, h: &SourceImage) -> Result<ObjectiveTerms> {
        let r = self.residuals(f, h)?;
        Ok(self.terms_from(f, h, &r))
    }

    pub fn objective(&self, f: &SourceImage, h: &SourceImage) -> Result<Objective> {
        Ok(self.terms(f, h)?.objective())
    }

    /// `(∇_f Φ, ∇_h Φ)` from precomputed residuals.
    pub fn gradient_from(&self, r: &Residuals) -> Result<(SourceImage, SourceImage)> {
        let gf = self
            .op
            .adjoint(&r.data_f)?
            .lincomb(1.0, &discrete_laplacian(&r.coupling), self.alpha);
        let gh = self
            .op
            .adjoint(&r.data_h)?
            .lincomb(1.0, &self.weight(&r.coupling), -self.alpha);
        Ok((gf, gh))
    }

    pub fn grad_smooth(&self, f: &SourceImage, h: &SourceImage) -> Result<(SourceImage, SourceImage)> {
        self.gradient_from(&self.residuals(f, h)?)
    }
}
