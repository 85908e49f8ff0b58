use std::fmt;
use std::str::FromStr;

use crate::error::{invalid_input, Result};

/// Point or displacement in metres. `x` points from the rail towards the base
/// station, `y` runs along the rail, `z` is height.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn norm(self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn distance(self, other: Self) -> f64 {
        (self - other).norm()
    }
}

impl std::ops::Sub for Point3 {
    type Output = Self;

    fn sub(self, other: Self) -> Self {
        Self::new(self.x - other.x, self.y - other.y, self.z - other.z)
    }
}

impl fmt::Display for Point3 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{},{}", self.x, self.y, self.z)
    }
}

impl FromStr for Point3 {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let parts: Vec<&str> = s.trim().trim_matches(|c| c == '(' || c == ')').split(',').collect();
        if parts.len() != 3 {
            return Err(format!("expected three comma-separated coordinates, got {s:?}"));
        }
        let mut xyz = [0.0; 3];
        for (slot, part) in xyz.iter_mut().zip(&parts) {
            *slot = part
                .trim()
                .parse()
                .map_err(|_| format!("bad coordinate {part:?} in {s:?}"))?;
        }
        Ok(Self::new(xyz[0], xyz[1], xyz[2]))
    }
}

/// Azimuth and elevation of the direction `from -> to`.
///
/// Azimuth is measured in the horizontal plane from the `+x` broadside axis,
/// in `(-pi, pi]`; elevation is measured up from the horizontal plane, in
/// `[-pi/2, pi/2]`.
pub fn angles(from: Point3, to: Point3) -> Result<(f64, f64)> {
    let d = to - from;
    if d.norm() == 0.0 {
        return Err(invalid_input("angles between coincident points are undefined"));
    }
    let horizontal = (d.x * d.x + d.y * d.y).sqrt();
    let mut azimuth = d.y.atan2(d.x);
    if azimuth == -std::f64::consts::PI {
        azimuth = std::f64::consts::PI;
    }
    Ok((azimuth, d.z.atan2(horizontal)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

    #[test]
    fn broadside_and_zenith() {
        let o = Point3::new(0.0, 0.0, 0.0);
        assert_eq!(angles(o, Point3::new(5.0, 0.0, 0.0)).unwrap(), (0.0, 0.0));
        let (_, el) = angles(o, Point3::new(0.0, 0.0, 3.0)).unwrap();
        assert!((el - FRAC_PI_2).abs() < 1e-15);
        let (az, _) = angles(o, Point3::new(-1.0, 0.0, 0.0)).unwrap();
        assert_eq!(az, PI);
    }

    #[test]
    fn diagonal_direction() {
        let (az, el) = angles(Point3::new(0.0, 0.0, 0.0), Point3::new(1.0, 1.0, 2f64.sqrt())).unwrap();
        assert!((az - FRAC_PI_4).abs() < 1e-15);
        assert!((el - FRAC_PI_4).abs() < 1e-15);
    }

    #[test]
    fn coincident_points_rejected() {
        let p = Point3::new(1.0, 2.0, 3.0);
        assert!(angles(p, p).is_err());
    }

    #[test]
    fn parses_points() {
        assert_eq!("20,0,2".parse::<Point3>().unwrap(), Point3::new(20.0, 0.0, 2.0));
        assert_eq!(" (0, 0, 1) ".parse::<Point3>().unwrap(), Point3::new(0.0, 0.0, 1.0));
        assert!("1,2".parse::<Point3>().is_err());
        let p = Point3::new(1.5, -2.0, 0.25);
        assert_eq!(p.to_string().parse::<Point3>().unwrap(), p);
    }
}
