use std::collections::BTreeMap;

use crate::model::{Payload, Value};

use super::EncodeError;

/// Maps every character outside `[A-Za-z0-9_]` to `_`.
pub fn sanitize(s: &str) -> String {
    s.chars().map(|c| if c.is_ascii_alphanumeric() || c == '_' { c } else { '_' }).collect()
}

pub(crate) fn value_name(v: &Value) -> String {
    match v.payload {
        Payload::Named(n) => sanitize(n.as_str()),
        Payload::Pool(i) => format!("{}_{i}", sanitize(v.ty.as_str())),
    }
}

pub(crate) fn null(sort: &str) -> String {
    format!("NULL_{sort}")
}

/// Identifiers claimed so far, compared case-insensitively.
#[derive(Clone, Debug, Default)]
pub(crate) struct Registry {
    taken: BTreeMap<String, (String, String)>,
}

impl Registry {
    /// Claims `ident` for `origin`. Claiming the same identifier twice for the
    /// same origin is allowed.
    pub fn claim(&mut self, ident: &str, origin: &str) -> Result<(), EncodeError> {
        let key = ident.to_ascii_lowercase();
        match self.taken.get(&key) {
            Some((id, o)) if o == origin && id == ident => Ok(()),
            Some((_, o)) => Err(EncodeError::Collision { ident: ident.to_string(), first: o.clone(), second: origin.to_string() }),
            None => {
                self.taken.insert(key, (ident.to_string(), origin.to_string()));
                Ok(())
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sanitizes_and_detects_case_clash() {
        assert_eq!(sanitize("in truck"), "in_truck");
        assert_eq!(value_name(&Value::pool("Order", 3)), "Order_3");
        let mut r = Registry::default();
        r.claim("Order", "type Order").unwrap();
        r.claim("Order", "type Order").unwrap();
        assert!(matches!(r.claim("order", "type order"), Err(EncodeError::Collision { .. })));
    }
}
