//! Pinhole back-projection, box estimation, and the camera's visible volume.
//!
//! Camera frame convention: +z forward along the optical axis, +x right,
//! +y down. Poses map camera coordinates to world coordinates.

use alloc::vec::Vec;

use crate::graph::{BBox3D, ObjectNode};
use crate::math::{self, Vec3};

/// Default near plane of the visible volume, meters.
pub const DEFAULT_NEAR: f64 = 0.3;
/// Default far plane of the visible volume, meters.
pub const DEFAULT_FAR: f64 = 4.0;
/// Default spatial-consistency radius, meters.
pub const DEFAULT_EPSILON: f64 = 0.5;

/// Point sets at least this large get the percentile outlier guard.
pub const OUTLIER_GUARD_MIN_POINTS: usize = 20;
const LOWER_PERCENTILE: f64 = 1.0;
const UPPER_PERCENTILE: f64 = 99.0;

const ORTHONORMAL_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GeometryError {
    #[error("invalid intrinsics: {0}")]
    Intrinsics(&'static str),
    #[error("rotation is not orthonormal with determinant +1")]
    Rotation,
    #[error("translation is not finite")]
    Translation,
    #[error("{what} has {found} values, expected {expected}")]
    ImageSize {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("mask is {mask_w}x{mask_h} but depth is {depth_w}x{depth_h}")]
    DimensionMismatch {
        mask_w: usize,
        mask_h: usize,
        depth_w: usize,
        depth_h: usize,
    },
    #[error("cannot bound an empty point set")]
    EmptyPointSet,
    #[error("need 0 < near < far, got near = {near}, far = {far}")]
    ClipRange { near: f64, far: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CameraIntrinsics {
    fx: f64,
    fy: f64,
    cx: f64,
    cy: f64,
    width: usize,
    height: usize,
}

impl CameraIntrinsics {
    pub fn new(fx: f64, fy: f64, cx: f64, cy: f64, width: usize, height: usize) -> Result<Self, GeometryError> {
        if !(fx > 0.0 && fy > 0.0 && fx.is_finite() && fy.is_finite()) {
            return Err(GeometryError::Intrinsics("focal lengths must be positive"));
        }
        if !(cx >= 0.0 && cx < width as f64 && cy >= 0.0 && cy < height as f64) {
            return Err(GeometryError::Intrinsics("principal point outside the image"));
        }
        Ok(CameraIntrinsics {
            fx,
            fy,
            cx,
            cy,
            width,
            height,
        })
    }

    pub fn fx(&self) -> f64 {
        self.fx
    }
    pub fn fy(&self) -> f64 {
        self.fy
    }
    pub fn cx(&self) -> f64 {
        self.cx
    }
    pub fn cy(&self) -> f64 {
        self.cy
    }
    pub fn width(&self) -> usize {
        self.width
    }
    pub fn height(&self) -> usize {
        self.height
    }
}

/// Camera-to-world rigid transform.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CameraPose {
    rotation: [[f64; 3]; 3],
    translation: Vec3,
}

impl CameraPose {
    /// `rotation` is row-major and must satisfy RᵀR = I (±1e-6) with det = +1.
    pub fn new(rotation: [[f64; 3]; 3], translation: Vec3) -> Result<Self, GeometryError> {
        if translation.iter().any(|v| !v.is_finite()) {
            return Err(GeometryError::Translation);
        }
        if rotation.iter().flatten().any(|v| !v.is_finite()) {
            return Err(GeometryError::Rotation);
        }
        for i in 0..3 {
            for j in 0..3 {
                let rtr: f64 = (0..3).map(|k| rotation[k][i] * rotation[k][j]).sum();
                let want = if i == j { 1.0 } else { 0.0 };
                if (rtr - want).abs() > ORTHONORMAL_TOLERANCE {
                    return Err(GeometryError::Rotation);
                }
            }
        }
        if (math::det3(&rotation) - 1.0).abs() > ORTHONORMAL_TOLERANCE {
            return Err(GeometryError::Rotation);
        }
        Ok(CameraPose {
            rotation,
            translation,
        })
    }

    pub fn identity() -> Self {
        CameraPose {
            rotation: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
            translation: [0.0; 3],
        }
    }

    pub fn rotation(&self) -> &[[f64; 3]; 3] {
        &self.rotation
    }

    pub fn translation(&self) -> Vec3 {
        self.translation
    }

    pub fn camera_to_world(&self, p: Vec3) -> Vec3 {
        math::add(math::mat_vec(&self.rotation, p), self.translation)
    }

    pub fn world_to_camera(&self, p: Vec3) -> Vec3 {
        math::mat_t_vec(&self.rotation, math::sub(p, self.translation))
    }
}

/// Row-major depth in meters; 0 or NaN marks a missing reading.
#[derive(Clone, Debug, PartialEq)]
pub struct DepthImage {
    width: usize,
    height: usize,
    values: Vec<f64>,
}

impl DepthImage {
    pub fn new(width: usize, height: usize, values: Vec<f64>) -> Result<Self, GeometryError> {
        if values.len() != width * height {
            return Err(GeometryError::ImageSize {
                what: "depth image",
                expected: width * height,
                found: values.len(),
            });
        }
        Ok(DepthImage {
            width,
            height,
            values,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }
    pub fn height(&self) -> usize {
        self.height
    }
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Depth at pixel `(u, v)` if it is a usable reading.
    pub fn valid_depth(&self, u: usize, v: usize) -> Option<f64> {
        let z = self.values[v * self.width + u];
        (z.is_finite() && z > 0.0).then_some(z)
    }
}

/// Row-major per-pixel membership.
#[derive(Clone, Debug, PartialEq)]
pub struct PixelMask {
    width: usize,
    height: usize,
    values: Vec<bool>,
}

impl PixelMask {
    pub fn new(width: usize, height: usize, values: Vec<bool>) -> Result<Self, GeometryError> {
        if values.len() != width * height {
            return Err(GeometryError::ImageSize {
                what: "mask",
                expected: width * height,
                found: values.len(),
            });
        }
        Ok(PixelMask {
            width,
            height,
            values,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }
    pub fn height(&self) -> usize {
        self.height
    }
    pub fn values(&self) -> &[bool] {
        &self.values
    }

    /// Masked pixels as `(u, v)` in row-major order.
    pub fn pixels(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.values
            .iter()
            .enumerate()
            .filter(|(_, m)| **m)
            .map(|(i, _)| (i % self.width, i / self.width))
    }
}

/// Lifts every masked pixel with a valid depth into world coordinates.
pub fn back_project(
    mask: &PixelMask,
    depth: &DepthImage,
    k: &CameraIntrinsics,
    pose: &CameraPose,
) -> Result<Vec<Vec3>, GeometryError> {
    if mask.width != depth.width || mask.height != depth.height {
        return Err(GeometryError::DimensionMismatch {
            mask_w: mask.width,
            mask_h: mask.height,
            depth_w: depth.width,
            depth_h: depth.height,
        });
    }
    Ok(mask
        .pixels()
        .filter_map(|(u, v)| {
            let z = depth.valid_depth(u, v)?;
            let cam = [
                (u as f64 - k.cx) * z / k.fx,
                (v as f64 - k.cy) * z / k.fy,
                z,
            ];
            Some(pose.camera_to_world(cam))
        })
        .collect())
}

/// Axis-aligned bounds of a point set.
///
/// With [`OUTLIER_GUARD_MIN_POINTS`] or more points, points that fall
/// outside the per-axis [1st, 99th] percentile band (linear interpolation)
/// become outlier candidates. At most `floor(2% of n)` of them are dropped,
/// largest band excursion first, so the result always keeps at least 98% of
/// the input.
pub fn bbox_from_points(points: &[Vec3]) -> Result<BBox3D, GeometryError> {
    if points.is_empty() {
        return Err(GeometryError::EmptyPointSet);
    }
    let mut keep = alloc::vec![true; points.len()];

    if points.len() >= OUTLIER_GUARD_MIN_POINTS {
        let mut bands = [(0.0, 0.0); 3];
        for (axis, band) in bands.iter_mut().enumerate() {
            let mut values: Vec<f64> = points.iter().map(|p| p[axis]).collect();
            values.sort_by(f64::total_cmp);
            *band = (
                math::percentile_sorted(&values, LOWER_PERCENTILE),
                math::percentile_sorted(&values, UPPER_PERCENTILE),
            );
        }
        let mut candidates: Vec<(f64, usize)> = points
            .iter()
            .enumerate()
            .filter_map(|(i, p)| {
                let excursion: f64 = (0..3)
                    .map(|a| {
                        let (lo, hi) = bands[a];
                        let width = (hi - lo).max(f64::MIN_POSITIVE);
                        ((lo - p[a]).max(0.0) + (p[a] - hi).max(0.0)) / width
                    })
                    .sum();
                (excursion > 0.0).then_some((excursion, i))
            })
            .collect();
        candidates.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        let budget = points.len() * 2 / 100;
        for &(_, i) in candidates.iter().take(budget) {
            keep[i] = false;
        }
    }

    let mut kept = points.iter().zip(&keep).filter(|(_, k)| **k).map(|(p, _)| *p);
    let first = kept.next().ok_or(GeometryError::EmptyPointSet)?;
    let (min, max) = kept.fold((first, first), |(mut lo, mut hi), p| {
        for a in 0..3 {
            lo[a] = lo[a].min(p[a]);
            hi[a] = hi[a].max(p[a]);
        }
        (lo, hi)
    });
    BBox3D::new(min, max).map_err(|_| GeometryError::EmptyPointSet)
}

/// The camera's visible volume: a pyramid from the camera center clipped to
/// `[near, far]` along the optical axis.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Frustum {
    pose: CameraPose,
    half_angle_h: f64,
    half_angle_v: f64,
    near: f64,
    far: f64,
}

impl Frustum {
    pub fn apex(&self) -> Vec3 {
        self.pose.translation
    }

    /// Unit optical axis in the world frame.
    pub fn forward(&self) -> Vec3 {
        let r = &self.pose.rotation;
        [r[0][2], r[1][2], r[2][2]]
    }

    pub fn pose(&self) -> &CameraPose {
        &self.pose
    }

    pub fn half_angle_horizontal(&self) -> f64 {
        self.half_angle_h
    }

    pub fn half_angle_vertical(&self) -> f64 {
        self.half_angle_v
    }

    pub fn near(&self) -> f64 {
        self.near
    }

    pub fn far(&self) -> f64 {
        self.far
    }

    /// Whether a world point lies inside the volume (boundaries included).
    pub fn contains_point(&self, p: Vec3) -> bool {
        let [x, y, z] = self.pose.world_to_camera(p);
        if !(z >= self.near && z <= self.far) {
            return false;
        }
        libm::fabs(x / z) <= libm::tan(self.half_angle_h) && libm::fabs(y / z) <= libm::tan(self.half_angle_v)
    }
}

/// Visible volume for a pose: half-angles `atan((width/2)/fx)` and
/// `atan((height/2)/fy)`.
pub fn compute_pov_volume(
    pose: &CameraPose,
    k: &CameraIntrinsics,
    near: f64,
    far: f64,
) -> Result<Frustum, GeometryError> {
    if !(near > 0.0 && near < far && far.is_finite()) {
        return Err(GeometryError::ClipRange { near, far });
    }
    Ok(Frustum {
        pose: *pose,
        half_angle_h: libm::atan((k.width as f64 / 2.0) / k.fx),
        half_angle_v: libm::atan((k.height as f64 / 2.0) / k.fy),
        near,
        far,
    })
}

/// Centroid-based containment: a box counts as visible when its center does.
pub fn frustum_contains(frustum: &Frustum, bbox: &BBox3D) -> bool {
    frustum.contains_point(bbox.centroid())
}

/// Spatial consistency between two boxes: centroids at most `epsilon` apart.
pub fn boxes_consistent(a: &BBox3D, b: &BBox3D, epsilon: f64) -> bool {
    math::distance(a.centroid(), b.centroid()) <= epsilon
}

/// Spatial consistency between a stored node and a new observation.
pub fn is_valid_association(node: &ObjectNode, bbox: &BBox3D, epsilon: f64) -> bool {
    boxes_consistent(&node.bbox, bbox, epsilon)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{Layer, NodeId, SemanticAttributes};
    use alloc::vec;

    fn k() -> CameraIntrinsics {
        CameraIntrinsics::new(500.0, 500.0, 320.0, 240.0, 640, 480).unwrap()
    }

    #[test]
    fn validation() {
        assert!(CameraIntrinsics::new(0.0, 1.0, 0.0, 0.0, 4, 4).is_err());
        assert!(CameraIntrinsics::new(1.0, 1.0, 4.0, 0.0, 4, 4).is_err());
        let reflect = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, -1.0]];
        assert_eq!(CameraPose::new(reflect, [0.0; 3]), Err(GeometryError::Rotation));
        let skew = [[1.0, 0.1, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        assert_eq!(CameraPose::new(skew, [0.0; 3]), Err(GeometryError::Rotation));
        assert!(DepthImage::new(2, 2, vec![1.0; 3]).is_err());
    }

    #[test]
    fn back_project_principal_point() {
        let k = k();
        let mut m = vec![false; 640 * 480];
        m[240 * 640 + 320] = true;
        let mask = PixelMask::new(640, 480, m).unwrap();
        let depth = DepthImage::new(640, 480, vec![2.0; 640 * 480]).unwrap();
        let pts = back_project(&mask, &depth, &k, &CameraPose::identity()).unwrap();
        assert_eq!(pts, vec![[0.0, 0.0, 2.0]]);
    }

    #[test]
    fn back_project_one_focal_length_right() {
        let k = CameraIntrinsics::new(2.0, 2.0, 1.0, 1.0, 4, 4).unwrap();
        // pixel (cx + fx, cy) = (3, 1)
        let mut m = vec![false; 16];
        m[4 + 3] = true;
        // an invalid reading elsewhere in the mask is skipped
        m[0] = true;
        let mut d = vec![1.0; 16];
        d[0] = f64::NAN;
        let pts = back_project(
            &PixelMask::new(4, 4, m).unwrap(),
            &DepthImage::new(4, 4, d).unwrap(),
            &k,
            &CameraPose::identity(),
        )
        .unwrap();
        assert_eq!(pts, vec![[1.0, 0.0, 1.0]]);
    }

    #[test]
    fn back_project_dimension_mismatch() {
        let err = back_project(
            &PixelMask::new(2, 2, vec![true; 4]).unwrap(),
            &DepthImage::new(4, 1, vec![1.0; 4]).unwrap(),
            &CameraIntrinsics::new(1.0, 1.0, 0.0, 0.0, 2, 2).unwrap(),
            &CameraPose::identity(),
        );
        assert!(matches!(err, Err(GeometryError::DimensionMismatch { .. })));
    }

    #[test]
    fn bbox_basics() {
        let b = bbox_from_points(&[[0.0; 3], [1.0; 3]]).unwrap();
        assert_eq!((b.min(), b.max()), ([0.0; 3], [1.0; 3]));
        let p = [0.3, -2.0, 5.0];
        let b = bbox_from_points(&[p]).unwrap();
        assert_eq!((b.min(), b.max()), (p, p));
        assert_eq!(bbox_from_points(&[]), Err(GeometryError::EmptyPointSet));
    }

    #[test]
    fn half_angles() {
        let square = CameraIntrinsics::new(320.0, 240.0, 320.0, 240.0, 640, 480).unwrap();
        let f = compute_pov_volume(&CameraPose::identity(), &square, 0.3, 4.0).unwrap();
        assert!((f.half_angle_horizontal() - core::f64::consts::FRAC_PI_4).abs() < 1e-12);
        let f = compute_pov_volume(&CameraPose::identity(), &k(), 0.3, 4.0).unwrap();
        assert!((f.half_angle_horizontal().to_degrees() - 32.6192).abs() < 1e-4);
        assert!(compute_pov_volume(&CameraPose::identity(), &k(), 4.0, 4.0).is_err());
        assert!(compute_pov_volume(&CameraPose::identity(), &k(), 0.0, 4.0).is_err());
        assert_eq!(f.forward(), [0.0, 0.0, 1.0]);
    }

    #[test]
    fn containment() {
        let f = compute_pov_volume(&CameraPose::identity(), &k(), 0.3, 4.0).unwrap();
        let centered = BBox3D::from_center_size([0.0, 0.0, 2.15], [0.1; 3]).unwrap();
        assert!(frustum_contains(&f, &centered));
        let behind = BBox3D::from_center_size([0.0, 0.0, -1.0], [0.1; 3]).unwrap();
        assert!(!frustum_contains(&f, &behind));
        let z = 2.0;
        let x = libm::tan(1.1 * f.half_angle_horizontal()) * z;
        let wide = BBox3D::from_center_size([x, 0.0, z], [0.1; 3]).unwrap();
        assert!(!frustum_contains(&f, &wide));
        let x = libm::tan(0.9 * f.half_angle_horizontal()) * z;
        let inside = BBox3D::from_center_size([x, 0.0, z], [0.1; 3]).unwrap();
        assert!(frustum_contains(&f, &inside));
        let too_far = BBox3D::from_center_size([0.0, 0.0, 4.5], [0.1; 3]).unwrap();
        assert!(!frustum_contains(&f, &too_far));
    }

    #[test]
    fn association_boundary() {
        let attrs = SemanticAttributes::new("mug", "", "", "").unwrap();
        let a = BBox3D::from_center_size([0.0; 3], [0.1; 3]).unwrap();
        let node = ObjectNode::new(NodeId(1), Layer::Object, attrs, a);
        assert!(is_valid_association(&node, &a, 0.5));
        let far = BBox3D::from_center_size([3.0, 0.0, 0.0], [0.1; 3]).unwrap();
        assert!(!is_valid_association(&node, &far, 0.5));
        let edge = BBox3D::from_center_size([0.5, 0.0, 0.0], [0.1; 3]).unwrap();
        assert!(is_valid_association(&node, &edge, 0.5));
    }
}
