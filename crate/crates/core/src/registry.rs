//! Name-keyed registries of strategy constructors.
//!
//! A registry maps a stable, lowercase name (as it appears in configuration
//! files and CLI flags) to a constructor returning a boxed trait object. Each
//! strategy family exposes a `builtin_registry()` with the variants shipped
//! by this crate; callers may add their own before looking names up.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};

/// Constructor for a strategy of type `T` from construction parameters `P`.
pub type Factory<T, P> = fn(&P) -> Result<Box<T>>;

pub struct Registry<T: ?Sized, P> {
    family: &'static str,
    entries: BTreeMap<&'static str, Factory<T, P>>,
}

impl<T: ?Sized, P> Registry<T, P> {
    pub fn new(family: &'static str) -> Self {
        Self {
            family,
            entries: BTreeMap::new(),
        }
    }

    /// Registers `factory` under `name`, replacing any previous entry.
    pub fn register(&mut self, name: &'static str, factory: Factory<T, P>) -> &mut Self {
        self.entries.insert(name, factory);
        self
    }

    pub fn contains(&self, name: &str) -> bool {
        self.entries.contains_key(name)
    }

    /// Registered names in sorted order.
    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.entries.keys().copied()
    }

    pub fn family(&self) -> &'static str {
        self.family
    }

    pub fn create(&self, name: &str, params: &P) -> Result<Box<T>> {
        match self.entries.get(name) {
            Some(factory) => factory(params),
            None => Err(Error::UnknownStrategy {
                family: self.family,
                name: name.to_owned(),
                known: self.names().collect::<Vec<_>>().join(", "),
            }),
        }
    }
}

impl<T: ?Sized, P> fmt::Debug for Registry<T, P> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Registry")
            .field("family", &self.family)
            .field("names", &self.entries.keys().collect::<Vec<_>>())
            .finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    trait Greeter {
        fn greet(&self) -> String;
    }

    struct Plain;
    impl Greeter for Plain {
        fn greet(&self) -> String {
            "hi".into()
        }
    }

    struct Loud(u32);
    impl Greeter for Loud {
        fn greet(&self) -> String {
            "HI".repeat(self.0 as usize)
        }
    }

    #[test]
    fn lookup_by_name() {
        let mut reg: Registry<dyn Greeter, u32> = Registry::new("greeter");
        reg.register("plain", |_| Ok(Box::new(Plain)))
            .register("loud", |n| Ok(Box::new(Loud(*n))));
        assert_eq!(reg.create("plain", &0).unwrap().greet(), "hi");
        assert_eq!(reg.create("loud", &2).unwrap().greet(), "HIHI");
        assert_eq!(reg.names().collect::<Vec<_>>(), vec!["loud", "plain"]);
    }

    #[test]
    fn unknown_name_lists_known_entries() {
        let mut reg: Registry<dyn Greeter, ()> = Registry::new("greeter");
        reg.register("plain", |_| Ok(Box::new(Plain)));
        let err = reg.create("shouty", &()).err().unwrap();
        let msg = err.to_string();
        assert!(msg.contains("shouty") && msg.contains("plain"), "{msg}");
    }
}
