//! Generators for values and protocol frames.

use kfarm::protocol::{Command, ErrorCode, Message};
use kfarm::value::Value;
use proptest::prelude::*;

fn finite_real() -> impl Strategy<Value = f64> {
    prop_oneof![
        any::<f64>().prop_filter("finite", |x| x.is_finite()),
        -1e6f64..1e6,
        Just(0.0),
        Just(-0.0),
        Just(1e16),
        Just(5e-324),
        Just(f64::MAX),
    ]
}

fn text() -> impl Strategy<Value = String> {
    prop_oneof![
        "\\PC{0,12}",
        "[\"\\\\ a-z{},\n]{0,8}",
    ]
}

pub fn value() -> impl Strategy<Value = Value> {
    let leaf = prop_oneof![
        finite_real().prop_map(Value::Real),
        any::<i64>().prop_map(Value::Integer),
        text().prop_map(Value::Text),
    ];
    leaf.prop_recursive(4, 48, 6, |inner| {
        prop::collection::vec(inner, 0..6).prop_map(Value::List)
    })
}

fn payload() -> impl Strategy<Value = Vec<String>> {
    prop::collection::vec("[^\n]{0,16}|[>|][A-Z ]{0,6}|>END", 0..5)
}

pub fn message() -> impl Strategy<Value = Message> {
    let command = prop::sample::select(Command::ALL.to_vec());
    let request = (
        1..=u64::MAX,
        command,
        prop::option::of("[^\n]{1,12}"),
        payload(),
    )
        .prop_map(|(id, command, arg, payload)| Message::Request {
            id,
            command,
            arg,
            payload,
        });
    let ok = (1..=u64::MAX, payload()).prop_map(|(id, payload)| Message::Ok { id, payload });
    let err = (0..=u64::MAX, "[A-Z]{1,10}", payload()).prop_map(|(id, code, payload)| {
        Message::Error {
            id,
            code: ErrorCode::parse(&code),
            payload,
        }
    });
    prop_oneof![request, ok, err]
}

/// Square matrices of finite reals, including values that need all 17
/// significant digits.
pub fn matrix_rows() -> impl Strategy<Value = Vec<Vec<f64>>> {
    (1usize..6).prop_flat_map(|n| {
        prop::collection::vec(prop::collection::vec(finite_real(), n), n)
    })
}
