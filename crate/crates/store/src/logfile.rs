use std::fs::{File, OpenOptions};
use std::io::{self, Write};
use std::path::Path;
use std::time::{Duration, Instant};

/// Records written since the last physical sync that force a new one.
pub const SYNC_EVERY_RECORDS: usize = 100;
/// Maximum age of unsynced data.
pub const SYNC_INTERVAL: Duration = Duration::from_secs(1);

/// One append-only log. Every append reaches the OS before returning; the
/// file is fsynced every [`SYNC_EVERY_RECORDS`] records or [`SYNC_INTERVAL`].
pub(crate) struct LogFile {
    file: File,
    len: u64,
    unsynced: usize,
    last_sync: Instant,
}

impl LogFile {
    /// Opens `path` for appending, cutting it back to `intact_len` bytes so a
    /// torn tail left by a crash is not glued to the next record.
    pub fn open(path: &Path, intact_len: u64) -> io::Result<Self> {
        let file = OpenOptions::new().create(true).truncate(false).read(true).write(true).open(path)?;
        if file.metadata()?.len() != intact_len {
            file.set_len(intact_len)?;
            file.sync_all()?;
        }
        let mut log = LogFile { file, len: intact_len, unsynced: 0, last_sync: Instant::now() };
        log.seek_end()?;
        Ok(log)
    }

    fn seek_end(&mut self) -> io::Result<()> {
        use std::io::{Seek, SeekFrom};
        self.file.seek(SeekFrom::Start(self.len)).map(|_| ())
    }

    pub fn append(&mut self, line: &[u8]) -> io::Result<()> {
        if let Err(e) = self.file.write_all(line) {
            // Drop whatever part of the line landed so the log stays parseable.
            let _ = self.file.set_len(self.len);
            let _ = self.seek_end();
            return Err(e);
        }
        self.len += line.len() as u64;
        self.unsynced += 1;
        if self.unsynced >= SYNC_EVERY_RECORDS || self.last_sync.elapsed() >= SYNC_INTERVAL {
            self.sync()?;
        }
        Ok(())
    }

    pub fn sync(&mut self) -> io::Result<()> {
        if self.unsynced > 0 {
            self.file.sync_data()?;
            self.unsynced = 0;
        }
        self.last_sync = Instant::now();
        Ok(())
    }

    pub fn sync_if_due(&mut self) -> io::Result<()> {
        if self.unsynced > 0 && self.last_sync.elapsed() >= SYNC_INTERVAL {
            self.sync()?;
        }
        Ok(())
    }

    #[cfg(test)]
    pub fn unsynced(&self) -> usize {
        self.unsynced
    }
}
