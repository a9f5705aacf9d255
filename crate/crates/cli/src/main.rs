use clap::Parser;

fn main() {
    let cli = qpd_sim::Cli::parse();
    match qpd_sim::run(&cli) {
        Ok(summary) => println!("{summary}"),
        Err(e) => {
            eprintln!("qpd-sim: {e}");
            std::process::exit(e.exit_code());
        }
    }
}
