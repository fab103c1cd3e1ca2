use core::fmt;

macro_rules! id_type {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
        pub struct $name(pub u32);

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "{}", self.0)
            }
        }

        impl From<u32> for $name {
            fn from(v: u32) -> Self {
                Self(v)
            }
        }
    };
}

id_type!(
    /// Junction identifier.
    NodeId
);
id_type!(
    /// Road segment identifier.
    LinkId
);
id_type!(
    /// Road connection (lane-to-lane movement at a junction) identifier.
    ConnectionId
);
id_type!(
    /// Vehicle type identifier.
    VehicleTypeId
);
