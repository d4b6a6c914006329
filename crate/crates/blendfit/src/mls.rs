//! Moving-least-squares projection for surfaces.
//!
//! Projecting a point involves two stages: searching for an optimal local
//! reference plane by minimizing the gaussian-weighted squared normal
//! deviations of the neighborhood, then fitting a bi-quadratic height field
//! over that plane and evaluating it at the plane foot point.
//!
//! The plane search is a nonlinear problem. It is solved by alternating
//! between weight updates and the closed-form optimum for fixed weights
//! (smallest principal axis of the weighted covariance about the weighted
//! centroid). The best iterate by objective value is returned, so the result
//! never regresses below the initial guess.

use nalgebra::{DMatrix, Matrix3, Point3, Unit, Vector3};

use crate::error::{Error, Result};
use crate::mesh::{Neighborhood, NeighborhoodPolicy, SpatialIndex};
use crate::numeric::{orthonormal_tangents, sym3_eigen_ascending, weighted_lsq};

/// Gaussian bandwidth policy for the weight function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bandwidth {
    /// Fixed bandwidth `h` (squared-length units in the exponent).
    Fixed(f64),
    /// `h = (mean distance from the query point to its neighbors)^2`,
    /// adapting to the local sampling density.
    AdaptiveMeanDistance,
}

/// Configuration for the MLS fits.
#[derive(Debug, Clone, PartialEq)]
pub struct MlsConfig {
    pub bandwidth: Bandwidth,
    pub neighborhood: NeighborhoodPolicy,
    /// Iteration cap for the nonlinear plane/line searches.
    pub max_iterations: usize,
    /// Absolute convergence tolerance, in length units.
    pub convergence_tol: f64,
}

impl Default for MlsConfig {
    fn default() -> Self {
        Self {
            bandwidth: Bandwidth::AdaptiveMeanDistance,
            neighborhood: NeighborhoodPolicy::KNearest(15),
            max_iterations: 30,
            convergence_tol: 1e-9,
        }
    }
}

impl MlsConfig {
    pub fn validate(&self) -> Result<()> {
        if let Bandwidth::Fixed(h) = self.bandwidth {
            if !(h > 0.0) {
                return Err(Error::Config(format!("bandwidth h must be positive, got {h}")));
            }
        }
        if self.max_iterations == 0 {
            return Err(Error::Config("max_iterations must be at least 1".into()));
        }
        if !(self.convergence_tol > 0.0) {
            return Err(Error::Config(format!(
                "convergence_tol must be positive, got {}",
                self.convergence_tol
            )));
        }
        Ok(())
    }

    /// Resolves the bandwidth for a concrete neighborhood.
    pub fn bandwidth_for(&self, nbrs: &Neighborhood) -> Result<f64> {
        match self.bandwidth {
            Bandwidth::Fixed(h) => Ok(h),
            Bandwidth::AdaptiveMeanDistance => {
                let mean = nbrs.mean_distance();
                if mean <= 0.0 {
                    return Err(Error::DegenerateNeighborhood(
                        "all neighbors coincide with the query point".into(),
                    ));
                }
                Ok(mean * mean)
            }
        }
    }
}

/// Gaussian weight `theta(x) = exp(-x^2 / h)`.
pub fn theta(x: f64, h: f64) -> f64 {
    (-x * x / h).exp()
}

/// Local reference plane through `origin + offset * normal`.
#[derive(Debug, Clone)]
pub struct ReferencePlane {
    pub normal: Unit<Vector3<f64>>,
    /// Signed distance `t` from the query point to the plane along `normal`.
    pub offset: f64,
    /// The query point the plane was fit around.
    pub origin: Point3<f64>,
}

impl ReferencePlane {
    /// Foot point `q = origin + offset * normal`.
    pub fn foot(&self) -> Point3<f64> {
        self.origin + self.normal.into_inner() * self.offset
    }
}

/// Local bi-quadratic height field `g(x, y)` over a reference plane.
#[derive(Debug, Clone)]
pub struct LocalQuadratic {
    /// Coefficients of `c0 + c1 x + c2 y + c3 x^2 + c4 xy + c5 y^2`.
    pub coeffs: [f64; 6],
    pub foot: Point3<f64>,
    pub normal: Unit<Vector3<f64>>,
    pub tangents: (Vector3<f64>, Vector3<f64>),
    /// Set when the normal system was rank deficient and ridge-regularized.
    pub ridged: bool,
}

impl LocalQuadratic {
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        let c = &self.coeffs;
        c[0] + c[1] * x + c[2] * y + c[3] * x * x + c[4] * x * y + c[5] * y * y
    }

    /// Lifts local plane coordinates back to 3D.
    pub fn point_at(&self, x: f64, y: f64) -> Point3<f64> {
        self.foot + self.tangents.0 * x + self.tangents.1 * y + self.normal.into_inner() * self.eval(x, y)
    }
}

fn plane_objective(
    r: &Point3<f64>,
    n: &Vector3<f64>,
    t: f64,
    members: &[(usize, f64)],
    points: &[Point3<f64>],
    h: f64,
) -> f64 {
    let q = r + n * t;
    members
        .iter()
        .map(|&(i, _)| {
            let d = points[i] - q;
            let dist = d.norm();
            n.dot(&d).powi(2) * theta(dist, h)
        })
        .sum()
}

/// Weighted centroid and covariance; weights evaluated at distances to `at`.
fn weighted_moments(
    at: &Point3<f64>,
    members: &[(usize, f64)],
    points: &[Point3<f64>],
    h: f64,
) -> (f64, Point3<f64>, Matrix3<f64>) {
    let mut wsum = 0.0;
    let mut centroid = Vector3::zeros();
    for &(i, _) in members {
        let w = theta((points[i] - at).norm(), h);
        wsum += w;
        centroid += points[i].coords * w;
    }
    let centroid = Point3::from(centroid / wsum);
    let mut cov = Matrix3::zeros();
    for &(i, _) in members {
        let w = theta((points[i] - at).norm(), h);
        let d = points[i] - centroid;
        cov += d * d.transpose() * w;
    }
    (wsum, centroid, cov)
}

/// Fits the optimal local reference plane for the neighborhood of `r`.
///
/// `hint` orients the normal (for meshes, the average incident-triangle
/// normal); without a hint the sign convention of the eigen-solver is kept.
pub fn fit_reference_plane(
    r: &Point3<f64>,
    nbrs: &Neighborhood,
    points: &[Point3<f64>],
    cfg: &MlsConfig,
    hint: Option<&Vector3<f64>>,
) -> Result<ReferencePlane> {
    if nbrs.len() < 3 {
        return Err(Error::DegenerateNeighborhood(format!(
            "plane fit needs at least 3 points, got {}",
            nbrs.len()
        )));
    }
    let h = cfg.bandwidth_for(nbrs)?;

    let orient = |v: Vector3<f64>, previous: Option<&Vector3<f64>>| -> Vector3<f64> {
        let reference = hint.or(previous);
        match reference {
            Some(d) if v.dot(d) < 0.0 => -v,
            _ => v,
        }
    };

    // Initial guess: weights centered on r itself.
    let (_, centroid, cov) = weighted_moments(r, &nbrs.members, points, h);
    let (evals, evecs) = sym3_eigen_ascending(&cov);
    if evals[1] <= 1e-12 * evals[2].max(f64::MIN_POSITIVE) {
        return Err(Error::DegenerateNeighborhood(
            "neighborhood is collinear or coincident; no unique plane".into(),
        ));
    }
    let mut n = orient(evecs[0], None);
    let mut t = n.dot(&(centroid - r));
    let mut best_obj = plane_objective(r, &n, t, &nbrs.members, points, h);
    let (mut best_n, mut best_t) = (n, t);

    let tol2 = cfg.convergence_tol * cfg.convergence_tol;
    let mut converged = false;
    let mut last_delta = f64::INFINITY;
    for _ in 0..cfg.max_iterations {
        // Re-center the weights on the current foot point, then take the
        // closed-form optimum for those weights.
        let q = r + n * t;
        let (_, centroid, cov) = weighted_moments(&q, &nbrs.members, points, h);
        let (evals, evecs) = sym3_eigen_ascending(&cov);
        if evals[1] <= 1e-12 * evals[2].max(f64::MIN_POSITIVE) {
            break;
        }
        let n_new = orient(evecs[0], Some(&n));
        let t_new = n_new.dot(&(centroid - r));
        let obj = plane_objective(r, &n_new, t_new, &nbrs.members, points, h);
        last_delta = (best_obj - obj).abs();
        if obj < best_obj {
            best_obj = obj;
            best_n = n_new;
            best_t = t_new;
        }
        let step = (n_new - n).norm() * nbrs.mean_distance() + (t_new - t).abs();
        n = n_new;
        t = t_new;
        if last_delta < tol2 || step < cfg.convergence_tol {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NonConvergence {
            iterations: cfg.max_iterations,
            last_delta,
        });
    }

    Ok(ReferencePlane {
        normal: Unit::new_normalize(best_n),
        offset: best_t,
        origin: *r,
    })
}

/// Fits the local bi-quadratic `g` over the reference plane by gaussian-weighted
/// least squares, weights evaluated at distances to the plane foot point.
pub fn fit_local_biquadratic(
    plane: &ReferencePlane,
    nbrs: &Neighborhood,
    points: &[Point3<f64>],
    cfg: &MlsConfig,
) -> Result<LocalQuadratic> {
    if nbrs.len() < 6 {
        return Err(Error::DegenerateNeighborhood(format!(
            "bi-quadratic fit needs at least 6 points, got {}",
            nbrs.len()
        )));
    }
    let h = cfg.bandwidth_for(nbrs)?;
    let q = plane.foot();
    let (t1, t2) = orthonormal_tangents(&plane.normal);

    let n = nbrs.len();
    let mut design = DMatrix::zeros(n, 6);
    let mut rhs = DMatrix::zeros(n, 1);
    let mut weights = Vec::with_capacity(n);
    for (row, &(i, _)) in nbrs.members.iter().enumerate() {
        let d = points[i] - q;
        let x = d.dot(&t1);
        let y = d.dot(&t2);
        let f = d.dot(&plane.normal);
        design[(row, 0)] = 1.0;
        design[(row, 1)] = x;
        design[(row, 2)] = y;
        design[(row, 3)] = x * x;
        design[(row, 4)] = x * y;
        design[(row, 5)] = y * y;
        rhs[(row, 0)] = f;
        weights.push(theta(d.norm(), h));
    }
    let sol = weighted_lsq(&design, &rhs, Some(&weights), 1e-8);
    let mut coeffs = [0.0; 6];
    for (k, c) in coeffs.iter_mut().enumerate() {
        *c = sol.coeffs[(k, 0)];
    }
    Ok(LocalQuadratic {
        coeffs,
        foot: q,
        normal: plane.normal,
        tangents: (t1, t2),
        ridged: sol.ridged,
    })
}

/// Full MLS projection of `r` onto the surface implicitly defined by the
/// indexed point set: reference plane, bi-quadratic fit, then evaluation at
/// the foot point.
pub fn project_point(r: &Point3<f64>, index: &SpatialIndex, cfg: &MlsConfig) -> Result<Point3<f64>> {
    project_point_with_hint(r, index, cfg, None)
}

/// [`project_point`] with an orientation hint for the reference-plane normal.
pub fn project_point_with_hint(
    r: &Point3<f64>,
    index: &SpatialIndex,
    cfg: &MlsConfig,
    hint: Option<&Vector3<f64>>,
) -> Result<Point3<f64>> {
    let nbrs = index.query(r, &cfg.neighborhood)?;
    if nbrs.is_empty() {
        return Err(Error::EmptyNeighborhood);
    }
    let plane = fit_reference_plane(r, &nbrs, index.points(), cfg, hint)?;
    let quad = fit_local_biquadratic(&plane, &nbrs, index.points(), cfg)?;
    Ok(quad.point_at(0.0, 0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use proptest::prelude::*;

    fn neighborhood_of_all(points: &[Point3<f64>], center: Point3<f64>) -> Neighborhood {
        let mut members: Vec<(usize, f64)> = points
            .iter()
            .enumerate()
            .map(|(i, p)| (i, (p - center).norm()))
            .collect();
        members.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        Neighborhood { center, members }
    }

    fn fixed_cfg(h: f64) -> MlsConfig {
        MlsConfig {
            bandwidth: Bandwidth::Fixed(h),
            ..MlsConfig::default()
        }
    }

    #[test]
    fn theta_values() {
        assert_eq!(theta(0.0, 1.0), 1.0);
        assert_relative_eq!(theta(1.0, 1.0), (-1.0f64).exp(), epsilon = 1e-15);
        assert_relative_eq!(theta(2.0, 4.0), (-1.0f64).exp(), epsilon = 1e-15);
    }

    proptest! {
        #[test]
        fn theta_strictly_decreasing(h in 1e-6f64..1e6, x1 in 0.0f64..100.0, dx in 1e-9f64..100.0) {
            let x2 = x1 + dx;
            prop_assert!(theta(x1, h) > theta(x2, h));
        }
    }

    #[test]
    fn plane_fit_exact_on_flat_data() {
        let points: Vec<Point3<f64>> = (0..5)
            .flat_map(|i| (0..5).map(move |j| Point3::new(i as f64, j as f64, 2.0)))
            .collect();
        let r = Point3::origin();
        let nbrs = neighborhood_of_all(&points, r);
        let plane = fit_reference_plane(&r, &nbrs, &points, &fixed_cfg(10.0), None).unwrap();
        assert_relative_eq!(plane.normal.z.abs(), 1.0, epsilon = 1e-12);
        assert_relative_eq!(plane.offset * plane.normal.z.signum(), 2.0, epsilon = 1e-12);
        let h = 10.0;
        let obj = plane_objective(
            &r,
            &plane.normal,
            plane.offset,
            &nbrs.members,
            &points,
            h,
        );
        assert!(obj < 1e-18, "residual objective {obj:e}");
    }

    /// Dense grid-search oracle over plane orientations: for each direction
    /// the optimal offset for fixed weights-at-foot is refined a few times.
    fn grid_search_plane(
        r: &Point3<f64>,
        points: &[Point3<f64>],
        h: f64,
        steps: usize,
    ) -> (Vector3<f64>, f64, f64) {
        let mut best = (Vector3::z(), 0.0, f64::INFINITY);
        for a in 0..steps {
            for b in 0..(2 * steps) {
                let polar = std::f64::consts::PI * (a as f64 + 0.5) / steps as f64 / 2.0;
                let azimuth = std::f64::consts::PI * b as f64 / steps as f64;
                let n = Vector3::new(
                    polar.sin() * azimuth.cos(),
                    polar.sin() * azimuth.sin(),
                    polar.cos(),
                );
                let mut t = 0.0;
                for _ in 0..4 {
                    let q = r + n * t;
                    let mut wsum = 0.0;
                    let mut tsum = 0.0;
                    for p in points {
                        let w = theta((p - q).norm(), h);
                        wsum += w;
                        tsum += w * n.dot(&(p - r));
                    }
                    t = tsum / wsum;
                }
                let members: Vec<(usize, f64)> =
                    (0..points.len()).map(|i| (i, 0.0)).collect();
                let obj = plane_objective(r, &n, t, &members, points, h);
                if obj < best.2 {
                    best = (n, t, obj);
                }
            }
        }
        best
    }

    #[test]
    fn paraboloid_axis_normal_matches_grid_search() {
        // Symmetric rings sampled from z = x^2 + y^2; query on the axis.
        let mut points = Vec::new();
        for ring in 1..=4 {
            let rad = 0.15 * ring as f64;
            for k in 0..12 {
                let ang = 2.0 * std::f64::consts::PI * k as f64 / 12.0;
                points.push(Point3::new(
                    rad * ang.cos(),
                    rad * ang.sin(),
                    rad * rad,
                ));
            }
        }
        let r = Point3::new(0.0, 0.0, 0.1);
        let nbrs = neighborhood_of_all(&points, r);
        let cfg = fixed_cfg(0.5);
        let plane = fit_reference_plane(&r, &nbrs, &points, &cfg, None).unwrap();
        assert!(plane.normal.z.abs() > 1.0 - 1e-6, "normal {:?}", plane.normal);
        // The oracle agrees that the optimum is the symmetry axis.
        let (n_oracle, _, _) = grid_search_plane(&r, &points, 0.5, 40);
        assert!(n_oracle.z.abs() > 0.999, "oracle normal {n_oracle:?}");
    }

    #[test]
    fn two_points_are_degenerate() {
        let points = vec![Point3::origin(), Point3::new(1.0, 0.0, 0.0)];
        let r = Point3::origin();
        let nbrs = neighborhood_of_all(&points, r);
        assert!(matches!(
            fit_reference_plane(&r, &nbrs, &points, &fixed_cfg(1.0), None),
            Err(Error::DegenerateNeighborhood(_))
        ));
    }

    fn plane_through_origin() -> ReferencePlane {
        ReferencePlane {
            normal: Unit::new_normalize(Vector3::z()),
            offset: 0.0,
            origin: Point3::origin(),
        }
    }

    #[test]
    fn biquadratic_recovers_exact_quadratic() {
        let plane = plane_through_origin();
        let (t1, t2) = orthonormal_tangents(&plane.normal);
        let mut points = Vec::new();
        for i in -2..=2 {
            for j in -2..=2 {
                let (x, y) = (0.3 * i as f64, 0.3 * j as f64);
                let g = x * x + y * y;
                points.push(Point3::origin() + t1 * x + t2 * y + plane.normal.into_inner() * g);
            }
        }
        let nbrs = neighborhood_of_all(&points, Point3::origin());
        let quad = fit_local_biquadratic(&plane, &nbrs, &points, &fixed_cfg(1.0)).unwrap();
        let expect = [0.0, 0.0, 0.0, 1.0, 0.0, 1.0];
        for (got, want) in quad.coeffs.iter().zip(expect) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-9);
        }
        assert!(!quad.ridged);
    }

    #[test]
    fn biquadratic_on_planar_data_has_no_curvature() {
        let plane = plane_through_origin();
        let mut points = Vec::new();
        for i in -2..=2i32 {
            for j in -2..=2i32 {
                points.push(Point3::new(
                    0.4 * i as f64,
                    0.4 * j as f64,
                    0.1 + 0.2 * (0.4 * i as f64) - 0.3 * (0.4 * j as f64),
                ));
            }
        }
        let nbrs = neighborhood_of_all(&points, Point3::origin());
        let quad = fit_local_biquadratic(&plane, &nbrs, &points, &fixed_cfg(2.0)).unwrap();
        for c in &quad.coeffs[3..] {
            assert_abs_diff_eq!(*c, 0.0, epsilon = 1e-9);
        }
    }

    /// Brute-force normal-equation oracle with an explicit 6x6 inversion.
    fn normal_equation_oracle(
        plane: &ReferencePlane,
        nbrs: &Neighborhood,
        points: &[Point3<f64>],
        h: f64,
    ) -> [f64; 6] {
        let q = plane.foot();
        let (t1, t2) = orthonormal_tangents(&plane.normal);
        let mut m = nalgebra::SMatrix::<f64, 6, 6>::zeros();
        let mut b = nalgebra::SVector::<f64, 6>::zeros();
        for &(i, _) in &nbrs.members {
            let d = points[i] - q;
            let (x, y) = (d.dot(&t1), d.dot(&t2));
            let f = d.dot(&plane.normal);
            let w = theta(d.norm(), h);
            let basis = [1.0, x, y, x * x, x * y, y * y];
            for a in 0..6 {
                for c in 0..6 {
                    m[(a, c)] += w * basis[a] * basis[c];
                }
                b[a] += w * basis[a] * f;
            }
        }
        let sol = m.try_inverse().unwrap() * b;
        [sol[0], sol[1], sol[2], sol[3], sol[4], sol[5]]
    }

    #[test]
    fn weighted_fit_matches_normal_equation_oracle() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..8 {
            let points: Vec<Point3<f64>> = (0..20)
                .map(|_| {
                    Point3::new(
                        rng.gen::<f64>() * 2.0 - 1.0,
                        rng.gen::<f64>() * 2.0 - 1.0,
                        rng.gen::<f64>() * 0.4 - 0.2,
                    )
                })
                .collect();
            let plane = plane_through_origin();
            let nbrs = neighborhood_of_all(&points, Point3::origin());
            let cfg = fixed_cfg(1.5);
            let quad = fit_local_biquadratic(&plane, &nbrs, &points, &cfg).unwrap();
            let oracle = normal_equation_oracle(&plane, &nbrs, &points, 1.5);
            for (got, want) in quad.coeffs.iter().zip(oracle) {
                assert_abs_diff_eq!(*got, want, epsilon = 1e-8);
            }
        }
    }

    fn plane_index(m: usize) -> SpatialIndex {
        let points: Vec<Point3<f64>> = (0..m)
            .flat_map(|i| {
                (0..m).map(move |j| {
                    Point3::new(i as f64 / (m - 1) as f64, j as f64 / (m - 1) as f64, 0.0)
                })
            })
            .collect();
        SpatialIndex::build(points).unwrap()
    }

    #[test]
    fn projecting_onto_sampled_plane() {
        let index = plane_index(15);
        let cfg = MlsConfig::default();
        // A point on the plane is (nearly) a fixed point.
        let on = Point3::new(0.5, 0.5, 0.0);
        let p = project_point(&on, &index, &cfg).unwrap();
        assert!((p - on).norm() < 1e-9);
        // A displaced point lands back on the plane.
        let off = Point3::new(0.4, 0.6, 0.05);
        let p = project_point(&off, &index, &cfg).unwrap();
        assert!(p.z.abs() < 1e-6, "projected z = {:e}", p.z);
    }

    #[test]
    fn projection_approx_idempotent_on_plane() {
        let index = plane_index(15);
        let cfg = MlsConfig::default();
        let r = Point3::new(0.37, 0.52, 0.03);
        let p1 = project_point(&r, &index, &cfg).unwrap();
        let p2 = project_point(&p1, &index, &cfg).unwrap();
        assert!((p2 - p1).norm() < 10.0 * cfg.convergence_tol);
    }

    #[test]
    fn sphere_projection_moves_toward_surface() {
        let mut points = Vec::new();
        let n = 40;
        for a in 1..n {
            let polar = std::f64::consts::PI * a as f64 / n as f64;
            for b in 0..(2 * n) {
                let az = std::f64::consts::PI * b as f64 / n as f64;
                points.push(Point3::new(
                    polar.sin() * az.cos(),
                    polar.sin() * az.sin(),
                    polar.cos(),
                ));
            }
        }
        let index = SpatialIndex::build(points).unwrap();
        let cfg = MlsConfig::default();
        let r = Point3::new(0.0, 0.0, 1.05);
        let p = project_point(&r, &index, &cfg).unwrap();
        assert!(
            (p.coords.norm() - 1.0).abs() < (r.coords.norm() - 1.0).abs(),
            "projection {:?} not closer to the unit sphere",
            p
        );
    }
}
