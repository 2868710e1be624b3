//! `ratrw`: batch front end for classification, derivation grammars and images.
//!
//! Exit codes: 0 ok, 1 usage or I/O, 2 parse, 3 class or precondition veto.

use std::fs;
use std::io::{self, Read as _, Write as _};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use ratrw::automata::TreeAutomaton;
use ratrw::classifier::{classify, encode_turing_machine, Class};
use ratrw::formats::{parse_automaton, parse_tm, parse_trs_with, print_automaton, print_trs};
use ratrw::grammar::{Enumerator, TupleGrammar};
use ratrw::rewriting::{reachable, suffix_reachable, topdown_reachable, Bounds, Trs};
use ratrw::suffix::{build_suffix_grammar, image_automaton_suffix, Direction};
use ratrw::terms::{format_word, parse_term, Term};
use ratrw::topdown::{build_bottomup, build_grammar, bounded_preimages, image_automaton, inverse_image_automaton};
use ratrw::{selfcheck, Error};

#[derive(Parser)]
#[command(name = "ratrw", version, about = "Rational derivations of linear term rewriting systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Which of top-down, bottom-up, prefix, suffix the system is, with witnesses.
    Classify {
        /// System file, `-` for stdin.
        trs: PathBuf,
    },
    /// Terms reachable from a ground term, one per line.
    Reach {
        trs: PathBuf,
        term: String,
        #[arg(long, default_value_t = 8)]
        steps: usize,
        /// Largest term size kept, intermediates included.
        #[arg(long, default_value_t = 12)]
        size: usize,
        #[arg(long, value_enum, default_value_t = Strategy::Unrestricted)]
        strategy: Strategy,
    },
    /// Derivation grammar of a system.
    Build {
        trs: PathBuf,
        #[arg(long, value_enum)]
        mode: Mode,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Tuples of a grammar up to a total size.
    Enum {
        grammar: PathBuf,
        #[arg(long, default_value_t = 8)]
        max_size: usize,
    },
    /// Exact membership of the pair (s, t) in the grammar's axiom.
    CheckPair { grammar: PathBuf, s: String, t: String },
    /// Automaton for the image or inverse image of L(A).
    Image {
        trs: PathBuf,
        automaton: PathBuf,
        #[arg(long, value_enum)]
        mode: Mode,
        #[arg(long, value_enum, default_value_t = Dir::Forward)]
        direction: Dir,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Bounded preimages of ground terms, for when no inverse automaton exists.
    Preimages {
        trs: PathBuf,
        #[arg(required = true)]
        terms: Vec<String>,
        #[arg(long, value_enum, default_value_t = Mode::Topdown)]
        mode: Mode,
        #[arg(long, default_value_t = 9)]
        max_size: usize,
    },
    /// Rewriting system simulating a Turing machine.
    EncodeTm {
        tm: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Oracle-equivalence suites; prints one line per criterion.
    Selfcheck {
        /// Run only these criteria.
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=9))]
        only: Vec<u8>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Strategy {
    Unrestricted,
    Topdown,
    Suffix,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Topdown,
    Bottomup,
    Suffix,
}

#[derive(Clone, Copy, ValueEnum)]
enum Dir {
    Forward,
    Inverse,
}

enum Failure {
    Usage(String),
    Core(Error),
    Veto(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Core(Error::Parse { .. } | Error::Format { .. } | Error::Alphabet(_)) => 2,
            Failure::Core(_) | Failure::Veto(_) => 3,
        }
    }
}

type Out = Result<(), Failure>;

fn read_input(path: &Path) -> Result<String, Failure> {
    if path == Path::new("-") {
        let mut s = String::new();
        io::stdin()
            .read_to_string(&mut s)
            .map_err(|e| Failure::Usage(format!("stdin: {e}")))?;
        return Ok(s);
    }
    fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

/// `autorule:` files are resolved next to the system file.
fn load_trs(path: &Path) -> Result<Trs, Failure> {
    let text = read_input(path)?;
    let dir = match path.parent() {
        Some(d) if path != Path::new("-") => d.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let load = |name: &str| {
        fs::read_to_string(dir.join(name)).map_err(|e| Error::Invalid(format!("{name}: {e}")))
    };
    Ok(parse_trs_with(&text, &load)?)
}

fn load_automaton(path: &Path, trs: &Trs) -> Result<TreeAutomaton, Failure> {
    let a = parse_automaton(&read_input(path)?)?;
    // One alphabet for everything loaded together.
    let mut shared = trs.alphabet.clone();
    shared.merge(&a.alphabet)?;
    Ok(a)
}

fn load_grammar(path: &Path) -> Result<TupleGrammar, Failure> {
    Ok(TupleGrammar::parse(&read_input(path)?)?)
}

fn ground(text: &str, trs_alphabet: &ratrw::terms::RankedAlphabet) -> Result<Term, Failure> {
    let none: &[&str] = &[];
    Ok(parse_term(text, trs_alphabet, none)?)
}

fn emit(text: &str, out: Option<&Path>) -> Out {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| Failure::Usage(format!("{}: {e}", p.display()))),
        None => {
            let mut stdout = io::stdout().lock();
            // A closed pipe is not an error worth reporting.
            let _ = stdout.write_all(text.as_bytes());
            Ok(())
        }
    }
}

fn lines<T: std::fmt::Display>(items: impl IntoIterator<Item = T>) -> String {
    items.into_iter().map(|t| format!("{t}\n")).collect()
}

fn derivation_grammar(trs: &Trs, mode: Mode) -> Result<TupleGrammar, Failure> {
    Ok(match mode {
        Mode::Topdown => build_grammar(trs)?,
        Mode::Bottomup => build_bottomup(trs)?,
        Mode::Suffix => build_suffix_grammar(trs)?,
    })
}

fn run(command: Command) -> Out {
    match command {
        Command::Classify { trs } => {
            let trs = load_trs(&trs)?;
            let report = classify(&trs)?;
            let classes: Vec<String> = report.classes.iter().map(Class::to_string).collect();
            let head = if classes.is_empty() {
                "classes: none".to_string()
            } else {
                format!("classes: {}", classes.join(" "))
            };
            emit(&format!("{head}\n{report}"), None)
        }
        Command::Reach {
            trs,
            term,
            steps,
            size,
            strategy,
        } => {
            let trs = load_trs(&trs)?;
            let t = ground(&term, &trs.alphabet)?;
            let bounds = Bounds::new(steps, size);
            let set = match strategy {
                Strategy::Unrestricted => reachable(&trs, &t, bounds)?,
                Strategy::Topdown => topdown_reachable(&trs, &t, bounds)?,
                Strategy::Suffix => suffix_reachable(&trs, &t, bounds)?,
            };
            emit(&lines(set), None)
        }
        Command::Build { trs, mode, out } => {
            let g = derivation_grammar(&load_trs(&trs)?, mode)?;
            emit(&g.to_string(), out.as_deref())
        }
        Command::Enum { grammar, max_size } => {
            let g = load_grammar(&grammar)?;
            let tuples = Enumerator::new(&g, &g.axiom)?.up_to(max_size);
            emit(&lines(tuples.iter().map(|w| format_word(w))), None)
        }
        Command::CheckPair { grammar, s, t } => {
            let g = load_grammar(&grammar)?;
            let s = ground(&s, &g.alphabet)?;
            let t = ground(&t, &g.alphabet)?;
            let yes = g.contains_tuple(&g.axiom, &[s, t])?;
            emit(if yes { "yes\n" } else { "no\n" }, None)
        }
        Command::Image {
            trs,
            automaton,
            mode,
            direction,
            out,
        } => {
            let trs = load_trs(&trs)?;
            let a = load_automaton(&automaton, &trs)?;
            let image = match (mode, direction) {
                (Mode::Topdown, Dir::Forward) => image_automaton(&trs, &a)?,
                (Mode::Bottomup, Dir::Inverse) => inverse_image_automaton(&trs, &a)?,
                (Mode::Topdown, Dir::Inverse) | (Mode::Bottomup, Dir::Forward) => {
                    return Err(Failure::Veto(
                        "this image of a recognizable language need not be recognizable \
                         (e.g. preimages of h*(f(a,a)) under f(g(x),g(y)) -> h(f(x,y))); \
                         use `ratrw preimages` for a bounded enumeration"
                            .into(),
                    ))
                }
                (Mode::Suffix, Dir::Forward) => image_automaton_suffix(&trs, &a, Direction::Forward)?,
                (Mode::Suffix, Dir::Inverse) => image_automaton_suffix(&trs, &a, Direction::Inverse)?,
            };
            emit(&print_automaton(&image), out.as_deref())
        }
        Command::Preimages {
            trs,
            terms,
            mode,
            max_size,
        } => {
            let trs = load_trs(&trs)?;
            let targets = terms
                .iter()
                .map(|t| ground(t, &trs.alphabet))
                .collect::<Result<Vec<_>, _>>()?;
            let g = derivation_grammar(&trs, mode)?;
            emit(&lines(bounded_preimages(&g, &targets, max_size)?), None)
        }
        Command::EncodeTm { tm, out } => {
            let m = parse_tm(&read_input(&tm)?)?;
            emit(&print_trs(&encode_turing_machine(&m)?), out.as_deref())
        }
        Command::Selfcheck { only } => {
            let wanted = |id: u8| only.is_empty() || only.contains(&id);
            let systems = if wanted(2) || wanted(3) {
                selfcheck::random_topdown_systems(50, 2024)
            } else {
                Vec::new()
            };
            let mut all_passed = true;
            for id in 1..=9u8 {
                if !wanted(id) {
                    continue;
                }
                let o = match id {
                    1 => selfcheck::criterion_1(),
                    2 => selfcheck::criterion_2(&systems),
                    3 => selfcheck::criterion_3(&systems),
                    4 => selfcheck::criterion_4(),
                    5 => selfcheck::criterion_5(),
                    6 => selfcheck::criterion_6(),
                    7 => selfcheck::criterion_7(),
                    8 => selfcheck::criterion_8(),
                    _ => selfcheck::criterion_9(),
                };
                all_passed &= o.passed;
                emit(&format!("{o}\n"), None)?;
            }
            if all_passed {
                Ok(())
            } else {
                Err(Failure::Veto("some criteria failed".into()))
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let code = f.code();
            match f {
                Failure::Usage(m) | Failure::Veto(m) => eprintln!("ratrw: {m}"),
                Failure::Core(e) => eprintln!("ratrw: {e}"),
            }
            ExitCode::from(code)
        }
    }
}
