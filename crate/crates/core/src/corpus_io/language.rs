use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// The 116 programming languages retained in the corpus.
pub const LANGUAGES: [&str; 116] = [
    "ABAP",
    "Ada",
    "Agda",
    "Alloy",
    "ANTLR",
    "AppleScript",
    "Arduino",
    "ASP",
    "Assembly",
    "Augeas",
    "Awk",
    "Batchfile",
    "Bison",
    "Bluespec",
    "C",
    "C-sharp",
    "C++",
    "Clojure",
    "CMake",
    "COBOL",
    "CoffeeScript",
    "Common-Lisp",
    "CSS",
    "Cucumber",
    "Cuda",
    "Cython",
    "Dart",
    "Dockerfile",
    "Eagle",
    "Elixir",
    "Elm",
    "Emacs-Lisp",
    "Erlang",
    "F-sharp",
    "FORTRAN",
    "GLSL",
    "GO",
    "Gradle",
    "GraphQL",
    "Groovy",
    "Haskell",
    "Haxe",
    "HCL",
    "HTML",
    "Idris",
    "Isabelle",
    "Java",
    "Java-Server-Pages",
    "JavaScript",
    "JSON",
    "JSON5",
    "JSONiq",
    "JSONLD",
    "JSX",
    "Julia",
    "Jupyter",
    "Kotlin",
    "Lean",
    "Literate-Agda",
    "Literate-CoffeeScript",
    "Literate-Haskell",
    "Lua",
    "Makefile",
    "Maple",
    "Markdown",
    "Mathematica",
    "Matlab",
    "Objective-C++",
    "OCaml",
    "OpenCL",
    "Pascal",
    "Perl",
    "PHP",
    "PowerShell",
    "Prolog",
    "Protocol-Buffer",
    "Python",
    "Python-traceback",
    "R",
    "Racket",
    "RDoc",
    "Restructuredtext",
    "RHTML",
    "RMarkdown",
    "Ruby",
    "Rust",
    "SAS",
    "Scala",
    "Scheme",
    "Shell",
    "Smalltalk",
    "Solidity",
    "SPARQL",
    "SQL",
    "Stan",
    "Standard-ML",
    "Stata",
    "Swift",
    "SystemVerilog",
    "Tcl",
    "Tcsh",
    "Tex",
    "Thrift",
    "Twig",
    "TypeScript",
    "Verilog",
    "VHDL",
    "Visual-Basic",
    "Vue",
    "Web-Ontology-Language",
    "WebAssembly",
    "XML",
    "XSLT",
    "Yacc",
    "YAML",
    "Zig",
];

const UNKNOWN_NAME: &str = "unknown";
const UNKNOWN_INDEX: u8 = u8::MAX;

/// One of [`LANGUAGES`] or the `unknown` sentinel. Any other name fails to
/// construct.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LanguageTag(u8);

impl LanguageTag {
    pub const UNKNOWN: LanguageTag = LanguageTag(UNKNOWN_INDEX);

    pub fn new(name: &str) -> Result<Self> {
        if name == UNKNOWN_NAME {
            return Ok(Self::UNKNOWN);
        }
        LANGUAGES
            .iter()
            .position(|l| *l == name)
            .map(|i| LanguageTag(i as u8))
            .ok_or_else(|| Error::Config(format!("`{name}` is not a recognised language")))
    }

    pub fn name(self) -> &'static str {
        if self.is_unknown() {
            UNKNOWN_NAME
        } else {
            LANGUAGES[self.0 as usize]
        }
    }

    pub fn is_unknown(self) -> bool {
        self.0 == UNKNOWN_INDEX
    }

    /// All 116 known languages, in list order.
    pub fn all() -> impl Iterator<Item = LanguageTag> {
        (0..LANGUAGES.len() as u8).map(LanguageTag)
    }

    pub fn all_set() -> BTreeSet<LanguageTag> {
        Self::all().collect()
    }
}

impl FromStr for LanguageTag {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        LanguageTag::new(s)
    }
}

impl fmt::Display for LanguageTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl fmt::Debug for LanguageTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "LanguageTag({})", self.name())
    }
}

impl Serialize for LanguageTag {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for LanguageTag {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        LanguageTag::new(&s).map_err(serde::de::Error::custom)
    }
}

/// Filename-based language lookup table.
#[derive(Debug, Clone)]
pub struct ExtensionMap {
    suffixes: HashMap<String, LanguageTag>,
    basenames: HashMap<String, LanguageTag>,
}

const BUILTIN_MAP: &str = include_str!("../../data/extensions.tsv");

impl ExtensionMap {
    pub fn builtin() -> &'static ExtensionMap {
        static MAP: OnceLock<ExtensionMap> = OnceLock::new();
        MAP.get_or_init(|| {
            ExtensionMap::parse(BUILTIN_MAP).expect("builtin extension map is valid")
        })
    }

    /// Parses the tab-separated table format used by `data/extensions.tsv`.
    pub fn parse(text: &str) -> Result<Self> {
        let mut suffixes = HashMap::new();
        let mut basenames = HashMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim_end();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, lang) = line.split_once('\t').ok_or_else(|| {
                Error::Config(format!("extension map line {}: missing tab", n + 1))
            })?;
            let tag = LanguageTag::new(lang.trim())?;
            if tag.is_unknown() {
                return Err(Error::Config(format!(
                    "extension map line {}: cannot map to `unknown`",
                    n + 1
                )));
            }
            if let Some(base) = key.strip_prefix('=') {
                basenames.insert(base.to_string(), tag);
            } else if key.starts_with('.') {
                suffixes.insert(key.to_lowercase(), tag);
            } else {
                return Err(Error::Config(format!(
                    "extension map line {}: key must start with `.` or `=`",
                    n + 1
                )));
            }
        }
        Ok(ExtensionMap {
            suffixes,
            basenames,
        })
    }

    pub fn lookup(&self, path: &str) -> LanguageTag {
        let base = path.rsplit(['/', '\\']).next().unwrap_or(path);
        if let Some(tag) = self.basenames.get(base) {
            return *tag;
        }
        let lower = base.to_lowercase();
        // Dots at index 0 mark hidden files, not extensions. Earlier dots give
        // longer suffixes, so the first hit is the longest match.
        for (i, _) in lower.match_indices('.').filter(|(i, _)| *i > 0) {
            if let Some(tag) = self.suffixes.get(&lower[i..]) {
                return *tag;
            }
        }
        LanguageTag::UNKNOWN
    }

    /// Every language reachable through at least one suffix or basename.
    pub fn covered(&self) -> BTreeSet<LanguageTag> {
        self.suffixes
            .values()
            .chain(self.basenames.values())
            .copied()
            .collect()
    }
}

/// Maps a file path to its language using the builtin extension table.
pub fn assign_language(path: &str) -> LanguageTag {
    ExtensionMap::builtin().lookup(path)
}
