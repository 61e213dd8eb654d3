use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::SplitMix64;

use super::Value;

/// Generator behind `Math.random`: splitmix64 seeded directly with the configured seed.
#[derive(Clone, Debug)]
pub struct Rng(SplitMix64);

impl Rng {
    pub fn new(seed: u64) -> Self {
        Rng(SplitMix64::seed_from_u64(seed))
    }

    /// Uniform in [0, 1) from the top 53 bits of the next output.
    pub fn next_f64(&mut self) -> f64 {
        (self.0.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}

/// Evaluates `Math.<name>(args)`. Every argument must be a number.
pub fn call_builtin(name: &str, args: &[Value], rng: &mut Rng) -> Result<Value, String> {
    let mut nums = Vec::with_capacity(args.len());
    for (i, a) in args.iter().enumerate() {
        match a {
            Value::Number(n) => nums.push(*n),
            other => {
                return Err(format!("Math.{name} expects numbers, argument {} is {}", i + 1, other.type_name()))
            }
        }
    }
    let first = nums.first().copied().unwrap_or(f64::NAN);
    let v = match name {
        "floor" => first.floor(),
        "ceil" => first.ceil(),
        "abs" => first.abs(),
        "min" => nums.iter().fold(f64::INFINITY, |acc, x| js_min(acc, *x)),
        "max" => nums.iter().fold(f64::NEG_INFINITY, |acc, x| js_max(acc, *x)),
        "random" => rng.next_f64(),
        _ => return Err(format!("unknown built-in Math.{name}")),
    };
    Ok(Value::Number(v))
}

// NaN is contagious and -0 orders below +0.
fn js_max(a: f64, b: f64) -> f64 {
    if a.is_nan() || b.is_nan() {
        f64::NAN
    } else if a == b {
        if a.is_sign_negative() { b } else { a }
    } else {
        a.max(b)
    }
}

fn js_min(a: f64, b: f64) -> f64 {
    if a.is_nan() || b.is_nan() {
        f64::NAN
    } else if a == b {
        if a.is_sign_negative() { a } else { b }
    } else {
        a.min(b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn call(name: &str, args: &[f64]) -> f64 {
        let args: Vec<Value> = args.iter().map(|n| Value::Number(*n)).collect();
        call_builtin(name, &args, &mut Rng::new(0)).unwrap().as_number().unwrap()
    }

    #[test]
    fn ieee_semantics() {
        assert_eq!(call("floor", &[2.7]), 2.0);
        assert_eq!(call("floor", &[-2.5]), -3.0);
        assert_eq!(call("ceil", &[2.1]), 3.0);
        assert_eq!(call("abs", &[-4.0]), 4.0);
        assert_eq!(call("max", &[1.0, 5.0]), 5.0);
        assert_eq!(call("min", &[1.0, 5.0, -2.0]), -2.0);
        assert_eq!(call("max", &[]), f64::NEG_INFINITY);
        assert!(call("max", &[1.0, f64::NAN]).is_nan());
        assert!(call("floor", &[]).is_nan());
        assert!(call("max", &[-0.0, 0.0]).is_sign_positive());
        assert!(call("min", &[0.0, -0.0]).is_sign_negative());
    }

    #[test]
    fn rejects_non_numbers() {
        let err = call_builtin("floor", &[Value::String("2".into())], &mut Rng::new(0)).unwrap_err();
        assert!(err.contains("string"));
    }

    #[test]
    fn random_is_frozen_per_seed() {
        // Reference splitmix64 outputs for seed 42, mapped through (x >> 11) * 2^-53.
        let mut rng = Rng::new(42);
        let a = rng.next_f64();
        let b = rng.next_f64();
        assert_eq!(a.to_bits(), GOLDEN_42[0].to_bits(), "{a}");
        assert_eq!(b.to_bits(), GOLDEN_42[1].to_bits(), "{b}");
        let mut again = Rng::new(42);
        assert_eq!((again.next_f64(), again.next_f64()), (a, b));
    }

    const GOLDEN_42: [f64; 2] = [0.7415648787718233, 0.1599103928769201];
}
