use crate::model::Status;

/// What happened to an element since its last recorded status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StatusEvent {
    MaterialChange,
    NonMaterialChange,
    CheckOff,
}

/// OK → Warning on the first unchecked material change; any further material
/// change before a check is a Failure. Checking off always resets to OK.
pub fn transition(current: Status, event: StatusEvent) -> Status {
    match (current, event) {
        (_, StatusEvent::CheckOff) => Status::Ok,
        (s, StatusEvent::NonMaterialChange) => s,
        (Status::Ok, StatusEvent::MaterialChange) => Status::Warning,
        (Status::Warning | Status::Failure, StatusEvent::MaterialChange) => Status::Failure,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn worst_of_ordering() {
        assert!(Status::Ok < Status::Warning && Status::Warning < Status::Failure);
        assert_eq!([Status::Ok, Status::Failure, Status::Warning].into_iter().max(), Some(Status::Failure));
    }

    #[test]
    fn transitions() {
        use Status::*;
        use StatusEvent::*;
        assert_eq!(transition(Ok, MaterialChange), Warning);
        assert_eq!(transition(Warning, MaterialChange), Failure);
        assert_eq!(transition(Failure, MaterialChange), Failure);
        assert_eq!(transition(Warning, NonMaterialChange), Warning);
        assert_eq!(transition(Failure, CheckOff), Ok);
    }
}
