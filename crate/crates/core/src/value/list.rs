use super::{Rng, Value, ValueError};

/// Magnitudes below this are replaced by exact zero when no tolerance is given.
pub const DEFAULT_CHOP_TOLERANCE: f64 = 1e-10;

/// A list of `times` pairs of uniform draws, drawn in row order.
pub fn random_table(times: i64, rng: &mut Rng) -> Result<Value, ValueError> {
    if times <= 0 {
        return Err(ValueError::NonPositive("times"));
    }
    Ok(Value::list((0..times).map(|_| {
        let x = rng.next_f64();
        let y = rng.next_f64();
        Value::list([Value::Real(x), Value::Real(y)])
    })))
}

/// Split a flat list into consecutive rows of length `k`.
pub fn partition(list: &Value, k: i64) -> Result<Value, ValueError> {
    let items = list.as_list().ok_or_else(|| ValueError::Type {
        expected: "list",
        found: list.kind().into(),
    })?;
    if k <= 0 {
        return Err(ValueError::NonPositive("partition length"));
    }
    let k = k as usize;
    if items.len() % k != 0 {
        return Err(ValueError::Indivisible {
            len: items.len(),
            k,
        });
    }
    Ok(Value::list(
        items.chunks(k).map(|row| Value::List(row.to_vec())),
    ))
}

/// Concatenate nested lists into one flat list of leaves.
pub fn flatten(v: &Value) -> Vec<Value> {
    fn go(v: &Value, out: &mut Vec<Value>) {
        match v {
            Value::List(items) => items.iter().for_each(|i| go(i, out)),
            leaf => out.push(leaf.clone()),
        }
    }
    let mut out = Vec::new();
    go(v, &mut out);
    out
}

/// Replace every real with `|x| < tol` by exact integer zero.
pub fn chop(v: &Value, tol: f64) -> Result<Value, ValueError> {
    match v {
        Value::Real(x) if x.abs() < tol => Ok(Value::Integer(0)),
        Value::Real(_) | Value::Integer(_) => Ok(v.clone()),
        Value::List(items) => items
            .iter()
            .map(|i| chop(i, tol))
            .collect::<Result<_, _>>()
            .map(Value::List),
        Value::Text(_) => Err(ValueError::Type {
            expected: "number",
            found: "string".into(),
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::value::parse_value;

    fn v(s: &str) -> Value {
        parse_value(s).unwrap()
    }

    #[test]
    fn random_table_shape() {
        let mut rng = Rng::seeded(1);
        let t = random_table(10, &mut rng).unwrap();
        let rows = t.as_list().unwrap();
        assert_eq!(rows.len(), 10);
        for row in rows {
            let pair = row.as_list().unwrap();
            assert_eq!(pair.len(), 2);
            for x in pair {
                let Value::Real(x) = x else { panic!() };
                assert!((0.0..1.0).contains(x));
            }
        }
        assert_eq!(random_table(1, &mut rng).unwrap().as_list().unwrap().len(), 1);
        assert!(random_table(0, &mut rng).is_err());
        assert!(random_table(-3, &mut rng).is_err());
    }

    #[test]
    fn random_table_consumes_two_draws_per_row() {
        let mut a = Rng::seeded(42);
        let t = random_table(5, &mut a).unwrap();
        let mut b = Rng::seeded(42);
        let flat: Vec<f64> = flatten(&t).iter().map(|x| x.as_f64().unwrap()).collect();
        let direct: Vec<f64> = (0..10).map(|_| b.next_f64()).collect();
        assert_eq!(flat, direct);
        assert_eq!(a, b);
        assert_eq!(t, random_table(5, &mut Rng::seeded(42)).unwrap());
    }

    #[test]
    fn partition_rows() {
        assert_eq!(partition(&v("{1,2,3,4}"), 2).unwrap(), v("{{1,2},{3,4}}"));
        assert_eq!(partition(&v("{\"a\"}"), 1).unwrap(), v("{{\"a\"}}"));
        assert_eq!(
            partition(&v("{1,2,3}"), 2),
            Err(ValueError::Indivisible { len: 3, k: 2 })
        );
        assert!(partition(&Value::Integer(1), 1).is_err());
        assert!(partition(&v("{1}"), 0).is_err());
    }

    #[test]
    fn chop_small_values() {
        assert_eq!(chop(&v("{1e-12, 5.0}"), 1e-10).unwrap(), v("{0, 5.0}"));
        assert_eq!(chop(&v("{0.5}"), 1e-10).unwrap(), v("{0.5}"));
        assert_eq!(
            chop(&v("{2.244994, 1.1e-16, -2.244994}"), 1e-10).unwrap(),
            v("{2.244994, 0, -2.244994}")
        );
        assert_eq!(chop(&v("{-3e-11, {7}}"), 1e-10).unwrap(), v("{0, {7}}"));
        assert!(chop(&v("{1, \"x\"}"), 1e-10).is_err());
    }
}
