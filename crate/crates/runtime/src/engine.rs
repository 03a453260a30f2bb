//! The built-in action registry that layout bindings resolve against.
//!
//! Only three actions exist: `quit`, `emit_command` and `log`. A binding may
//! name them with or without the `action:` prefix. Layouts referring to
//! anything else are rejected at load time; there is no way to run external
//! commands.

use fizi_core::{InterfaceEvent, Layout};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Action {
    /// Ends the frame loop after the current frame's command.
    Quit,
    /// Writes the triggering event to the command sink.
    EmitCommand,
    /// Logs the triggering event.
    Log,
}

impl Action {
    pub fn parse(name: &str) -> Option<Action> {
        match name.strip_prefix("action:").unwrap_or(name) {
            "quit" => Some(Action::Quit),
            "emit_command" => Some(Action::EmitCommand),
            "log" => Some(Action::Log),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Action::Quit => "quit",
            Action::EmitCommand => "emit_command",
            Action::Log => "log",
        }
    }
}

/// Checks that every binding in the layout names a registered action.
pub fn check_layout(layout: &Layout) -> Result<(), String> {
    for (zone, kind, name) in layout.actions() {
        if Action::parse(name).is_none() {
            return Err(format!(
                "zone {:?} binds {} to unknown action {name:?} (known: quit, emit_command, log)",
                zone.id,
                kind.binding_attr()
            ));
        }
    }
    Ok(())
}

/// Actions triggered by this frame's events, in event order.
pub fn dispatch<'a>(
    layout: &Layout,
    events: &'a [InterfaceEvent],
) -> Vec<(Action, &'a InterfaceEvent)> {
    events
        .iter()
        .filter_map(|ev| {
            let name = layout.zone(&ev.zone_id)?.action_for(ev.kind)?;
            Some((Action::parse(name)?, ev))
        })
        .collect()
}
