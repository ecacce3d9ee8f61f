pub mod bench;
pub mod constraint;
pub mod dsl;
pub mod io;
pub mod search;
pub mod server;
pub mod synth;
pub mod task;
pub mod suite;
pub mod table;
pub mod trace;
pub mod value;
pub mod vegalite;
pub mod viz;
pub mod viz_synth;

pub use table::{ColumnMapping, Table, TableError};
pub use trace::{ElementKind, VisualElement, VisualTrace};
pub use value::Value;
pub use viz::{Channel, Layer, LayerKind, Mark, Orient, Plot, VizProgram};
