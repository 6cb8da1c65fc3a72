//! The stock losses and vector fields used by the toy experiments.

use crate::error::{Error, Result};

use super::{Field, ScalarField, VectorField};

/// Names accepted by [`builtin`]. `prop3_main` and `prop3_aux` also accept a
/// parenthesized coefficient, e.g. `prop3_main(2.5)`.
pub const BUILTIN_NAMES: &[&str] = &[
    "quad1d_main",
    "quad1d_aux",
    "L1",
    "L2",
    "L3",
    "L4",
    "V",
    "prop3_main",
    "prop3_aux",
];

/// Looks up a builtin field by name.
pub fn builtin(name: &str) -> Result<Field> {
    let (base, coeff) = split_coefficient(name)?;
    let field = match base {
        "quad1d_main" => ScalarField::new(
            "quad1d_main",
            1,
            |x| (x[0] - 10.0).powi(2),
            |x| vec![2.0 * (x[0] - 10.0)],
        )
        .into(),
        "quad1d_aux" => {
            ScalarField::new("quad1d_aux", 1, |x| x[0] * x[0], |x| vec![2.0 * x[0]]).into()
        }
        "L1" => ScalarField::new(
            "L1",
            2,
            |x| x[0] * x[0] + x[1] * x[1],
            |x| vec![2.0 * x[0], 2.0 * x[1]],
        )
        .into(),
        "L2" => l2().into(),
        "L3" => ScalarField::new(
            "L3",
            2,
            |x| (x[0] - 1.0).powi(2) + (x[1] - 1.0).powi(2),
            |x| vec![2.0 * (x[0] - 1.0), 2.0 * (x[1] - 1.0)],
        )
        .into(),
        "L4" => ScalarField::new(
            "L4",
            2,
            |x| (x[0] - 2.0).powi(2) + (x[1] - 0.5).powi(2),
            |x| vec![2.0 * (x[0] - 2.0), 2.0 * (x[1] - 0.5)],
        )
        .into(),
        "V" => v_field().into(),
        "prop3_main" => prop3_main(coeff.unwrap_or(1.0)).into(),
        "prop3_aux" => prop3_aux(coeff.unwrap_or(1.0)).into(),
        _ => return Err(Error::UnknownField(name.to_string())),
    };
    if coeff.is_some() && !base.starts_with("prop3") {
        return Err(Error::UnknownField(name.to_string()));
    }
    Ok(field)
}

fn split_coefficient(name: &str) -> Result<(&str, Option<f64>)> {
    match (name.find('('), name.ends_with(')')) {
        (Some(open), true) => {
            let value: f64 = name[open + 1..name.len() - 1]
                .parse()
                .map_err(|_| Error::UnknownField(name.to_string()))?;
            Ok((&name[..open], Some(value)))
        }
        (None, false) => Ok((name, None)),
        _ => Err(Error::UnknownField(name.to_string())),
    }
}

/// Bowl on the left half plane, saturating plateau on the right. The plane
/// `x0 = 0` is non-smooth; the value there follows the left branch.
fn l2() -> ScalarField {
    ScalarField::new(
        "L2",
        2,
        |x| {
            let r2 = x[0] * x[0] + x[1] * x[1];
            if x[0] <= 0.0 {
                r2
            } else {
                1.0 - (-2.0 * r2).exp()
            }
        },
        |x| {
            if x[0] <= 0.0 {
                vec![2.0 * x[0], 2.0 * x[1]]
            } else {
                let e = (-2.0 * (x[0] * x[0] + x[1] * x[1])).exp();
                vec![4.0 * x[0] * e, 4.0 * x[1] * e]
            }
        },
    )
    .with_smooth_at(|x| x[0].abs() > 1e-3)
}

/// The rotational field with a `-2x` pull; singular at the origin.
fn v_field() -> VectorField {
    VectorField::new("V", 2, |x| {
        let r2 = x[0] * x[0] + x[1] * x[1];
        vec![-x[1] / r2 - 2.0 * x[0], x[0] / r2 - 2.0 * x[1]]
    })
}

/// The linear ramp `a*x0`.
pub fn prop3_main(a: f64) -> ScalarField {
    ScalarField::new(format!("prop3_main({a})"), 2, move |x| a * x[0], move |_| {
        vec![a, 0.0]
    })
}

/// The same ramp restricted to the closed box `[1,2] x [0,1]`, zero outside.
pub fn prop3_aux(a: f64) -> ScalarField {
    let in_box = |x: &[f64]| (1.0..=2.0).contains(&x[0]) && (0.0..=1.0).contains(&x[1]);
    ScalarField::new(
        format!("prop3_aux({a})"),
        2,
        move |x| if in_box(x) { a * x[0] } else { 0.0 },
        move |x| {
            if in_box(x) {
                vec![a, 0.0]
            } else {
                vec![0.0, 0.0]
            }
        },
    )
    .with_smooth_at(move |x| {
        let d0 = (x[0] - 1.0).abs().min((x[0] - 2.0).abs());
        let d1 = x[1].abs().min((x[1] - 1.0).abs());
        d0 > 1e-3 && d1 > 1e-3
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar(name: &str) -> ScalarField {
        match builtin(name).unwrap() {
            Field::Scalar(f) => f,
            _ => panic!("{name} is not scalar"),
        }
    }

    #[test]
    fn l1_direct_substitution() {
        assert_eq!(scalar("L1").eval(&[1.0, 1.0]), 2.0);
    }

    #[test]
    fn l2_value_and_gradient() {
        let l2 = scalar("L2");
        // Just right of the origin the plateau branch starts at 0.
        assert!(l2.eval(&[1e-12, 0.0]).abs() < 1e-9);
        let g = l2.grad(&[1.0, 0.0]);
        let expect = 4.0 * (-2.0f64).exp();
        assert!((g[0] - expect).abs() < 1e-12);
        assert_eq!(g[1], 0.0);
        // At x0 = 0 exactly the left branch defines the value.
        assert_eq!(l2.eval(&[0.0, 2.0]), 4.0);
    }

    #[test]
    fn v_field_value() {
        let v = match builtin("V").unwrap() {
            Field::Vector(f) => f,
            _ => panic!(),
        };
        assert_eq!(v.eval(&[1.0, 0.0]), vec![-2.0, 1.0]);
    }

    #[test]
    fn prop3_fields_respect_box() {
        let main = prop3_main(1.0);
        assert_eq!(main.grad(&[5.0, -7.0]), vec![1.0, 0.0]);
        let aux = prop3_aux(1.0);
        assert_eq!(aux.grad(&[1.5, 0.5]), vec![1.0, 0.0]);
        assert_eq!(aux.grad(&[0.5, 0.5]), vec![0.0, 0.0]);
        // Closed box: the boundary is inside.
        assert_eq!(aux.grad(&[1.0, 0.0]), vec![1.0, 0.0]);
        assert_eq!(aux.eval(&[2.0, 1.0]), 2.0);
        assert_eq!(aux.eval(&[2.0 + 1e-12, 1.0]), 0.0);
    }

    #[test]
    fn coefficient_parsing() {
        let f = builtin("prop3_main(2.5)").unwrap();
        assert_eq!(f.update(&[0.0, 0.0]), vec![2.5, 0.0]);
        assert!(builtin("L1(2.0)").is_err());
        assert!(builtin("nope").is_err());
        assert!(builtin("prop3_main(").is_err());
    }

    #[test]
    fn quad1d_pair() {
        let main = scalar("quad1d_main");
        let aux = scalar("quad1d_aux");
        assert_eq!(main.grad(&[-20.0]), vec![-60.0]);
        assert_eq!(aux.grad(&[-20.0]), vec![-40.0]);
    }
}
