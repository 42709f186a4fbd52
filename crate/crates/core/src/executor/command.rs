//! External command evaluation.
//!
//! The command template runs under `/bin/sh -c`. In file render modes the
//! configuration is written to a temporary file whose path replaces the
//! `{config_file}` placeholder; in env mode each parameter is exported as a
//! `CONEX_*` variable instead. Performance is read from stdout: by default
//! the last float on the last non-empty line, or the first capture group of
//! `perf_pattern` (its last match wins, so progress output is harmless).

use crate::executor::render::{render_env, render_json, render_properties, RenderMode};
use crate::executor::{EvalStatus, ExecutorError, PerformanceSource, SourceOutcome};
use crate::space::Configuration;
use regex::Regex;
use std::io::Read;
use std::io::Write;
use std::process::{Command, Stdio};
use std::time::{Duration, Instant, SystemTime};

pub const CONFIG_FILE_PLACEHOLDER: &str = "{config_file}";
const STDERR_CAP: usize = 8 * 1024;

#[derive(Debug, Clone)]
pub struct CommandSettings {
    pub template: String,
    pub render: RenderMode,
    /// `None` uses the built-in "last float on the last stdout line" rule.
    pub perf_pattern: Option<Regex>,
    pub repeats: usize,
    pub timeout: Option<Duration>,
}

impl CommandSettings {
    pub fn new(template: impl Into<String>) -> Self {
        CommandSettings {
            template: template.into(),
            render: RenderMode::PropertiesFile,
            perf_pattern: None,
            repeats: 3,
            timeout: None,
        }
    }
}

pub struct CommandEvaluator {
    settings: CommandSettings,
}

impl CommandEvaluator {
    pub fn new(settings: CommandSettings) -> Result<Self, ExecutorError> {
        if settings.repeats == 0 {
            return Err(ExecutorError::Render("repeats must be at least 1".into()));
        }
        let has_placeholder = settings.template.contains(CONFIG_FILE_PLACEHOLDER);
        match settings.render {
            RenderMode::Env if has_placeholder => {
                return Err(ExecutorError::Render(format!(
                    "env rendering passes no file; remove {CONFIG_FILE_PLACEHOLDER} from the template"
                )))
            }
            RenderMode::PropertiesFile | RenderMode::JsonFile if !has_placeholder => {
                return Err(ExecutorError::Render(format!(
                    "file rendering needs {CONFIG_FILE_PLACEHOLDER} in the template"
                )))
            }
            _ => {}
        }
        Ok(CommandEvaluator { settings })
    }

    pub fn settings(&self) -> &CommandSettings {
        &self.settings
    }

    /// One command invocation. `Err` is reserved for infrastructure
    /// problems; a run that exits non-zero, times out, or prints no
    /// parseable number comes back as a status.
    fn invoke(&self, config: &Configuration) -> Result<RepeatResult, ExecutorError> {
        let mut cmdline = self.settings.template.clone();

        // The temp file must outlive the child.
        let mut _config_file = None;
        let mut env_vars = None;
        match self.settings.render {
            RenderMode::Env => env_vars = Some(render_env(config)?),
            RenderMode::PropertiesFile | RenderMode::JsonFile => {
                let (suffix, body) = match self.settings.render {
                    RenderMode::PropertiesFile => (".properties", render_properties(config)),
                    _ => (".json", render_json(config)),
                };
                let mut file = tempfile::Builder::new()
                    .prefix("conex-config-")
                    .suffix(suffix)
                    .tempfile()?;
                file.write_all(body.as_bytes())?;
                file.flush()?;
                cmdline = cmdline.replace(
                    CONFIG_FILE_PLACEHOLDER,
                    &file.path().display().to_string(),
                );
                _config_file = Some(file);
            }
        }

        let mut command = Command::new("/bin/sh");
        command
            .arg("-c")
            .arg(&cmdline)
            .stdin(Stdio::null())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped());
        // Own process group, so a timeout can kill the shell's descendants
        // too; otherwise they inherit the pipes and the readers block.
        #[cfg(unix)]
        std::os::unix::process::CommandExt::process_group(&mut command, 0);
        if let Some(vars) = env_vars {
            command.envs(vars);
        }
        let mut child = command.spawn().map_err(|source| ExecutorError::Spawn {
            command: cmdline.clone(),
            source,
        })?;

        let mut stdout_pipe = child.stdout.take().expect("stdout is piped");
        let mut stderr_pipe = child.stderr.take().expect("stderr is piped");
        let readers = std::thread::scope(|scope| {
            let out = scope.spawn(move || {
                let mut buf = Vec::new();
                let _ = stdout_pipe.read_to_end(&mut buf);
                buf
            });
            let err = scope.spawn(move || {
                let mut buf = Vec::new();
                let _ = stderr_pipe.read_to_end(&mut buf);
                buf
            });

            let deadline = self.settings.timeout.map(|t| Instant::now() + t);
            let status = loop {
                if let Some(status) = child.try_wait().ok().flatten() {
                    break Some(status);
                }
                if deadline.map(|d| Instant::now() >= d).unwrap_or(false) {
                    // `--` is load-bearing: without it the negative pgid is
                    // misparsed and the signal lands on our own group.
                    #[cfg(unix)]
                    {
                        let _ = Command::new("kill")
                            .args(["-9", "--", &format!("-{}", child.id())])
                            .status();
                    }
                    let _ = child.kill();
                    let _ = child.wait();
                    break None;
                }
                std::thread::sleep(Duration::from_millis(5));
            };
            (status, out.join().unwrap_or_default(), err.join().unwrap_or_default())
        });
        let (status, stdout_buf, stderr_buf) = readers;
        let stdout = String::from_utf8_lossy(&stdout_buf).into_owned();
        let mut stderr = String::from_utf8_lossy(&stderr_buf).into_owned();
        if stderr.len() > STDERR_CAP {
            let mut cut = STDERR_CAP;
            while !stderr.is_char_boundary(cut) {
                cut -= 1;
            }
            stderr.truncate(cut);
        }

        let Some(status) = status else {
            return Ok(RepeatResult { status: EvalStatus::Timeout, value: None, stderr });
        };
        if !status.success() {
            if stderr.is_empty() {
                stderr = format!("command exited with {status}");
            }
            return Ok(RepeatResult { status: EvalStatus::Failed, value: None, stderr });
        }
        match self.parse_performance(&stdout) {
            Some(v) => Ok(RepeatResult { status: EvalStatus::Ok, value: Some(v), stderr }),
            None => Ok(RepeatResult {
                status: EvalStatus::Failed,
                value: None,
                stderr: format!("no positive performance number found in stdout; {stderr}"),
            }),
        }
    }

    fn parse_performance(&self, stdout: &str) -> Option<f64> {
        let candidate = match &self.settings.perf_pattern {
            Some(re) => {
                let last = re.captures_iter(stdout).last()?;
                last.get(1).or_else(|| last.get(0))?.as_str().to_string()
            }
            None => {
                let line = stdout.lines().rev().find(|l| !l.trim().is_empty())?;
                let float = Regex::new(r"[-+]?\d+(?:\.\d+)?(?:[eE][-+]?\d+)?")
                    .expect("static pattern");
                float.find_iter(line).last()?.as_str().to_string()
            }
        };
        candidate
            .trim()
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite() && *v > 0.0)
    }
}

struct RepeatResult {
    status: EvalStatus,
    value: Option<f64>,
    stderr: String,
}

impl PerformanceSource for CommandEvaluator {
    fn run(&self, config: &Configuration) -> Result<SourceOutcome, ExecutorError> {
        let started = Instant::now();
        let timestamp = SystemTime::now()
            .duration_since(SystemTime::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .ok();

        let mut repeats = Vec::with_capacity(self.settings.repeats);
        let mut stderr_tail = None;
        let mut status = EvalStatus::Ok;
        for _ in 0..self.settings.repeats {
            let r = self.invoke(config)?;
            if !r.stderr.is_empty() {
                stderr_tail = Some(r.stderr);
            }
            match r.status {
                EvalStatus::Ok => repeats.push(r.value.expect("ok repeat carries a value")),
                other => {
                    // One bad repeat spoils the record; keep what was measured.
                    status = other;
                    break;
                }
            }
        }
        let performance = if status == EvalStatus::Ok {
            Some(repeats.iter().sum::<f64>() / repeats.len() as f64)
        } else {
            None
        };
        Ok(SourceOutcome {
            status,
            repeats,
            performance,
            wall_clock_secs: started.elapsed().as_secs_f64(),
            timestamp_epoch_secs: timestamp,
            stderr: stderr_tail,
        })
    }

    fn fingerprint(&self) -> String {
        format!(
            "command:{}|render={:?}|pattern={}|repeats={}|timeout={:?}",
            self.settings.template,
            self.settings.render,
            self.settings
                .perf_pattern
                .as_ref()
                .map(|r| r.as_str())
                .unwrap_or("<default>"),
            self.settings.repeats,
            self.settings.timeout,
        )
    }
}
