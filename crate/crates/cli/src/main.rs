use clap::Parser;
use snakemorph_cli::commands::{execute, Cli};

fn main() {
    let cli = Cli::parse();
    if let Err(e) = execute(cli.command) {
        // library errors already embed their cause in the message
        let mut msg = e.to_string();
        for cause in e.chain().skip(1) {
            let text = cause.to_string();
            if !msg.contains(&text) {
                msg = format!("{msg}: {text}");
            }
        }
        eprintln!("error: {msg}");
        std::process::exit(1);
    }
}
