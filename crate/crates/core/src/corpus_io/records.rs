//! Line-delimited JSON record files, optionally gzip-compressed.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::marker::PhantomData;
use std::path::{Path, PathBuf};

use flate2::read::MultiGzDecoder;
use flate2::write::GzEncoder;
use flate2::Compression;
use serde::de::DeserializeOwned;
use serde::Serialize;

use super::document::Document;
use crate::error::{Error, Result};

/// A type that can live in a record file.
pub trait Record: Serialize + DeserializeOwned {
    fn record_id(&self) -> &str;

    fn check(&self) -> std::result::Result<(), String> {
        Ok(())
    }
}

impl Record for Document {
    fn record_id(&self) -> &str {
        &self.id
    }

    fn check(&self) -> std::result::Result<(), String> {
        self.validate()
    }
}

fn is_gz(path: &Path) -> bool {
    path.extension().is_some_and(|e| e == "gz")
}

/// Streams records in file order. Each line is validated as UTF-8, parsed,
/// checked, and its id compared against all ids seen so far.
pub struct RecordReader<T> {
    inner: Box<dyn BufRead>,
    line: usize,
    offset: u64,
    seen: HashSet<String>,
    buf: Vec<u8>,
    done: bool,
    _marker: PhantomData<T>,
}

impl<T: Record> RecordReader<T> {
    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let inner: Box<dyn BufRead> = if is_gz(path) {
            Box::new(BufReader::new(MultiGzDecoder::new(file)))
        } else {
            Box::new(BufReader::with_capacity(1 << 16, file))
        };
        Ok(Self::from_reader(inner))
    }

    pub fn from_reader(inner: impl Read + 'static) -> Self {
        RecordReader {
            inner: Box::new(BufReader::new(inner)),
            line: 0,
            offset: 0,
            seen: HashSet::new(),
            buf: Vec::new(),
            done: false,
            _marker: PhantomData,
        }
    }

    fn malformed(&self, offset: u64, message: impl Into<String>) -> Error {
        Error::MalformedRecord {
            line: self.line,
            offset,
            message: message.into(),
        }
    }

    fn next_record(&mut self) -> Result<Option<T>> {
        loop {
            self.buf.clear();
            let n = self
                .inner
                .read_until(b'\n', &mut self.buf)
                .map_err(|e| self.malformed(self.offset, e.to_string()))?;
            if n == 0 {
                return Ok(None);
            }
            self.line += 1;
            let start = self.offset;
            self.offset += n as u64;
            let mut bytes = &self.buf[..];
            if let Some(stripped) = bytes.strip_suffix(b"\n") {
                bytes = stripped;
            }
            if bytes.is_empty() {
                continue;
            }
            let text = std::str::from_utf8(bytes).map_err(|e| {
                self.malformed(
                    start + e.valid_up_to() as u64,
                    "ill-formed UTF-8 byte sequence",
                )
            })?;
            let record: T =
                serde_json::from_str(text).map_err(|e| self.malformed(start, format!("{e}")))?;
            record.check().map_err(|m| self.malformed(start, m))?;
            if !self.seen.insert(record.record_id().to_string()) {
                return Err(Error::DuplicateId {
                    id: record.record_id().to_string(),
                    line: self.line,
                });
            }
            return Ok(Some(record));
        }
    }
}

impl<T: Record> Iterator for RecordReader<T> {
    type Item = Result<T>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        match self.next_record() {
            Ok(Some(r)) => Some(Ok(r)),
            Ok(None) => {
                self.done = true;
                None
            }
            Err(e) => {
                self.done = true;
                Some(Err(e))
            }
        }
    }
}

pub struct RecordWriter {
    path: PathBuf,
    inner: Box<dyn Write>,
    count: u64,
}

impl RecordWriter {
    pub fn create(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref().to_path_buf();
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
        let file = File::create(&path).map_err(|e| Error::io(&path, e))?;
        let buffered = BufWriter::with_capacity(1 << 16, file);
        let inner: Box<dyn Write> = if is_gz(&path) {
            Box::new(GzEncoder::new(buffered, Compression::default()))
        } else {
            Box::new(buffered)
        };
        Ok(RecordWriter {
            path,
            inner,
            count: 0,
        })
    }

    pub fn write<T: Serialize>(&mut self, record: &T) -> Result<()> {
        serde_json::to_writer(&mut self.inner, record)
            .map_err(|e| Error::io(&self.path, e.into()))?;
        self.inner
            .write_all(b"\n")
            .map_err(|e| Error::io(&self.path, e))?;
        self.count += 1;
        Ok(())
    }

    pub fn finish(mut self) -> Result<u64> {
        self.inner.flush().map_err(|e| Error::io(&self.path, e))?;
        // Dropping the encoder writes the gzip trailer.
        drop(self.inner);
        Ok(self.count)
    }
}

pub fn read_records(path: impl AsRef<Path>) -> Result<RecordReader<Document>> {
    RecordReader::open(path)
}

pub fn read_all<T: Record>(path: impl AsRef<Path>) -> Result<Vec<T>> {
    RecordReader::<T>::open(path)?.collect()
}

pub fn write_records<'a, T: Serialize + 'a>(
    records: impl IntoIterator<Item = &'a T>,
    path: impl AsRef<Path>,
) -> Result<u64> {
    let mut w = RecordWriter::create(path)?;
    for r in records {
        w.write(r)?;
    }
    w.finish()
}
