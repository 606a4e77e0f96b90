fn main() {
    let out = bvcov_cli::run(std::env::args_os());
    if out.code == bvcov_cli::EXIT_USAGE {
        eprint!("{}", out.output);
    } else {
        print!("{}", out.output);
    }
    std::process::exit(out.code);
}
