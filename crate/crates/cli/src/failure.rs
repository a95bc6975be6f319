use serde_json::{json, Value};
use taboo_hitting::Error;

pub const EXIT_VERIFY: u8 = 1;
pub const EXIT_INPUT: u8 = 2;
pub const EXIT_NUMERICAL: u8 = 3;

/// A failed run: printed as `{"error": {"kind", "message"}}`.
#[derive(Debug)]
pub struct Failure {
    pub kind: String,
    pub message: String,
    pub exit: u8,
}

impl Failure {
    pub fn usage(message: String) -> Self {
        Failure {
            kind: "Usage".into(),
            message,
            exit: EXIT_INPUT,
        }
    }

    pub fn io(path: &std::path::Path, e: std::io::Error) -> Self {
        Failure {
            kind: "Io".into(),
            message: format!("{}: {e}", path.display()),
            exit: EXIT_INPUT,
        }
    }

    pub fn exit_code(&self) -> u8 {
        self.exit
    }

    pub fn to_record(&self) -> Value {
        json!({ "error": { "kind": self.kind, "message": self.message } })
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let exit = if e.is_numerical() { EXIT_NUMERICAL } else { EXIT_INPUT };
        Failure {
            kind: e.kind().into(),
            message: e.to_string(),
            exit,
        }
    }
}
